use std::collections::{BTreeSet, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, SweepAxis};
use super::pipeline::{create_dir, train_ensemble};
use super::plot::{line_chart_svg, Series};
use crate::cs_baselines::{bomp, oracle_exhaustive, BompConfig};
use crate::daud_net::{ensemble_predict, read_checkpoint, NetworkParams};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, record_stream, streams};
use crate::signal_model::{real_split, AudInstance, AudScenario, Environment};

/// Fraction of the true active devices present in the detected set.
pub fn success_probability(detected: &[usize], truth: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidInput("true support is empty".into()));
    }
    let hits = truth.iter().filter(|d| detected.contains(d)).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Mean and normal-approximation 95% half-width of per-trial scores.
pub fn mean_and_half_width(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    if scores.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = scores.iter().sum::<f64>() / n;
    if scores.len() < 2 {
        return (mean, 0.0);
    }
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmScore {
    pub algorithm: Algorithm,
    pub p_succ: f64,
    pub ci_half_width: f64,
    pub trials: usize,
    pub mean_runtime_s: f64,
    /// Per-trial success fractions, in trial order.
    pub per_trial: Vec<f64>,
}

/// One CSV row. Runtimes live in a separate timing file so this stays a pure
/// function of the config and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub point: usize,
    pub axis: String,
    pub value: f64,
    pub algorithm: String,
    pub p_succ: f64,
    pub trials: usize,
    pub ci_half_width: f64,
    pub unresolved: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub point: usize,
    pub axis: String,
    pub value: f64,
    pub algorithm: String,
    pub mean_runtime_s: f64,
}

/// Draws `trials` test instances at a fixed SNR from the test stream. The same
/// `(seed, trial)` pair always yields the same supports, so grid points that
/// only change the SNR are scored on paired instances.
pub fn test_instances(env: &Environment, snr_db: f64, trials: usize, seed: u64) -> Result<(Environment, Vec<AudInstance>)> {
    let test_env = Environment::with_codebook(env.scenario.with_snr_db(snr_db), env.codebook.clone())?;
    let instances = (0..trials as u64)
        .into_par_iter()
        .map(|i| test_env.synthesize(&mut record_stream(seed, streams::TEST_BASE, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok((test_env, instances))
}

/// Scores every algorithm on the same test instances.
pub fn evaluate_algorithms(
    env: &Environment,
    instances: &[AudInstance],
    algorithms: &[Algorithm],
    models: &[NetworkParams<f32>],
) -> Result<Vec<AlgorithmScore>> {
    let k = env.scenario.active;
    let mut out = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let start = Instant::now();
        let supports: Vec<Vec<usize>> = match algorithm {
            Algorithm::Daud | Algorithm::DaudEnsemble => {
                if models.is_empty() {
                    return Err(Error::InvalidConfig(format!(
                        "{} requested but no trained models are available",
                        algorithm.label()
                    )));
                }
                let members = if algorithm == Algorithm::Daud { &models[..1] } else { models };
                let inputs: Vec<f32> = instances
                    .iter()
                    .flat_map(|inst| real_split(&inst.y).into_iter().map(|v| v as f32))
                    .collect();
                ensemble_predict(members, &inputs, k)?.1
            }
            Algorithm::LsBomp => instances
                .par_iter()
                .map(|inst| bomp(&inst.y, env.sensing(), &BompConfig::ls(k)).map(|r| r.support))
                .collect::<Result<_>>()?,
            Algorithm::MmseBomp => instances
                .par_iter()
                .map(|inst| {
                    let cfg = BompConfig::mmse(k, env.mmse_ratio(inst));
                    bomp(&inst.y, env.sensing(), &cfg).map(|r| r.support)
                })
                .collect::<Result<_>>()?,
            Algorithm::Oracle => instances
                .par_iter()
                .map(|inst| oracle_exhaustive(&inst.y, env.sensing(), k).map(|r| r.support))
                .collect::<Result<_>>()?,
        };
        let elapsed = start.elapsed().as_secs_f64();
        let per_trial: Vec<f64> = supports
            .iter()
            .zip(instances)
            .map(|(s, inst)| success_probability(s, &inst.support))
            .collect::<Result<_>>()?;
        let (p_succ, ci_half_width) = mean_and_half_width(&per_trial);
        out.push(AlgorithmScore {
            algorithm,
            p_succ,
            ci_half_width,
            trials: instances.len(),
            mean_runtime_s: elapsed / instances.len().max(1) as f64,
            per_trial,
        });
    }
    Ok(out)
}

/// The parts of a point's config that determine its trained models. The
/// test SNR is not among them, so an SNR sweep trains once.
#[derive(Serialize)]
struct TrainingKey<'a> {
    seed: u64,
    scenario: AudScenario,
    network: &'a super::config::NetworkSettings,
    train: &'a crate::daud_net::TrainConfig,
    data: &'a super::config::DataSettings,
}

fn training_key(config: &ExperimentConfig) -> Result<String> {
    toml::to_string(&TrainingKey {
        seed: config.seed,
        scenario: config.scenario.clone(),
        network: &config.network,
        train: &config.train,
        data: &config.data,
    })
    .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn load_pretrained(paths: &[PathBuf]) -> Result<Vec<NetworkParams<f32>>> {
    paths
        .iter()
        .enumerate()
        .map(|(i, path)| {
            if !path.is_file() {
                return Err(Error::MissingCheckpoint {
                    entry: format!("ensemble member {i}"),
                    path: path.clone(),
                });
            }
            read_checkpoint(path)
        })
        .collect()
}

/// Scenario of grid point `index`, with a derived codebook seed when the
/// point changes the codebook dimensions.
pub fn point_scenario(config: &ExperimentConfig, index: usize) -> AudScenario {
    let mut sc = config.scenario.clone();
    if config.sweep.axis.regenerates_codebook() {
        sc.codebook_seed = derive_seed(config.scenario.codebook_seed, index as u64);
    }
    sc
}

pub struct SweepPaths {
    pub csv: PathBuf,
    pub ledger: PathBuf,
    pub timing: PathBuf,
    pub svg: PathBuf,
}

impl SweepPaths {
    pub fn new(out: &Path) -> Self {
        SweepPaths {
            csv: out.join("sweep.csv"),
            ledger: out.join("sweep.done"),
            timing: out.join("sweep_timing.csv"),
            svg: out.join("sweep.svg"),
        }
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn rewrite_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn append_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let fresh = !path.exists() || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_ledger(path: &Path) -> Result<BTreeSet<usize>> {
    if !path.exists() {
        return Ok(BTreeSet::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim().parse().map_err(|_| Error::Format {
                kind: "sweep ledger",
                reason: format!("bad line {l:?}"),
            })
        })
        .collect()
}

/// Runs the configured sweep, writing `sweep.csv` incrementally. Grid points
/// listed in `sweep.done` are skipped, so an interrupted run resumes where it
/// stopped and produces the same file as an uninterrupted one.
pub fn run_sweep(config: &ExperimentConfig, out: &Path) -> Result<Vec<ResultRow>> {
    config.validate()?;
    create_dir(out)?;
    let paths = SweepPaths::new(out);
    let done = read_ledger(&paths.ledger)?;

    // Drop rows of points that were cut off before reaching the ledger.
    let kept: Vec<ResultRow> = read_rows::<ResultRow>(&paths.csv)?
        .into_iter()
        .filter(|r| done.contains(&r.point))
        .collect();
    rewrite_rows(&paths.csv, &kept)?;
    let kept_timing: Vec<TimingRow> = read_rows::<TimingRow>(&paths.timing)?
        .into_iter()
        .filter(|r| done.contains(&r.point))
        .collect();
    rewrite_rows(&paths.timing, &kept_timing)?;

    let learned = config.sweep.algorithms.iter().any(|a| a.is_learned());
    let pretrained = if learned && !config.sweep.checkpoints.is_empty() {
        Some(load_pretrained(&config.sweep.checkpoints)?)
    } else {
        None
    };
    let mut trained: HashMap<String, Vec<NetworkParams<f32>>> = HashMap::new();
    let axis = config.sweep.axis;

    for (index, &value) in config.sweep.values.iter().enumerate() {
        if done.contains(&index) {
            continue;
        }
        let point = config.at_point(value)?;
        let env = Environment::new(point_scenario(&point, index))?;
        let models = match (&pretrained, learned) {
            (_, false) => Vec::new(),
            (Some(models), true) => {
                let shape = point.network.shape(&env.scenario)?;
                if models.iter().any(|m| m.shape.input_dim != shape.input_dim || m.shape.outputs != shape.outputs) {
                    return Err(Error::InvalidConfig(format!(
                        "pretrained checkpoints do not fit grid point {}={value}",
                        axis.label()
                    )));
                }
                models.clone()
            }
            (None, true) => {
                let mut key_config = point.clone();
                key_config.scenario = env.scenario.clone();
                let key = training_key(&key_config)?;
                if let Some(models) = trained.get(&key) {
                    models.clone()
                } else {
                    let models: Vec<_> = train_ensemble(&point, &env)?.into_iter().map(|m| m.params).collect();
                    trained.insert(key, models.clone());
                    models
                }
            }
        };

        let snr = point.test_snr_db(value);
        let (test_env, instances) = test_instances(&env, snr, point.sweep.trials, point.seed)?;
        let scores = evaluate_algorithms(&test_env, &instances, &point.sweep.algorithms, &models)?;
        let rows: Vec<ResultRow> = scores
            .iter()
            .map(|s| ResultRow {
                point: index,
                axis: axis.label().to_string(),
                value,
                algorithm: s.algorithm.label().to_string(),
                p_succ: s.p_succ,
                trials: s.trials,
                ci_half_width: s.ci_half_width,
                unresolved: 0,
            })
            .collect();
        let timing: Vec<TimingRow> = scores
            .iter()
            .map(|s| TimingRow {
                point: index,
                axis: axis.label().to_string(),
                value,
                algorithm: s.algorithm.label().to_string(),
                mean_runtime_s: s.mean_runtime_s,
            })
            .collect();
        append_rows(&paths.csv, &rows)?;
        append_rows(&paths.timing, &timing)?;
        let mut ledger = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&paths.ledger)
            .map_err(|e| Error::io(&paths.ledger, e))?;
        writeln!(ledger, "{index}").map_err(|e| Error::io(&paths.ledger, e))?;
        for s in &scores {
            log::info!(
                "{}={value}: {} P_succ {:.4} ± {:.4}",
                axis.label(),
                s.algorithm.label(),
                s.p_succ,
                s.ci_half_width
            );
        }
    }

    let mut rows = read_rows::<ResultRow>(&paths.csv)?;
    rows.sort_by(|a, b| a.point.cmp(&b.point));
    rewrite_rows(&paths.csv, &rows)?;
    let mut timing = read_rows::<TimingRow>(&paths.timing)?;
    timing.sort_by(|a, b| a.point.cmp(&b.point));
    rewrite_rows(&paths.timing, &timing)?;
    write_plot(&paths.svg, axis, &rows)?;
    Ok(rows)
}

fn write_plot(path: &Path, axis: SweepAxis, rows: &[ResultRow]) -> Result<()> {
    let mut series: Vec<Series> = Vec::new();
    for row in rows {
        let idx = match series.iter().position(|s| s.name == row.algorithm) {
            Some(i) => i,
            None => {
                series.push(Series {
                    name: row.algorithm.clone(),
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        series[idx].points.push((row.value, row.p_succ));
    }
    let svg = line_chart_svg("P_succ", axis.label(), &series);
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
