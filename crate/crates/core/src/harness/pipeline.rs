use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::daud_net::{checkpoint_bytes, train, LossPoint, NetworkParams, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, streams};
use crate::signal_model::{collect_dataset, write_dataset, DatasetHeader, Environment, Sample};
use crate::sparsity_est::{calibrate_tau, BankManifest, ManifestEntry, ModelBank};

/// Stream holding the training records of ensemble member `member` at
/// sparsity `level`.
pub fn training_stream(level: usize, member: usize) -> u64 {
    streams::TRAIN_BASE + 1000 * level as u64 + member as u64
}

/// Seed for initialization, fold assignment and dropout of one member.
pub fn member_seed(master: u64, level: usize, member: usize) -> u64 {
    derive_seed(master, training_stream(level, member))
}

pub fn calibration_stream(level: usize) -> u64 {
    streams::CALIBRATION + 1000 * level as u64
}

#[derive(Clone, Debug)]
pub struct TrainedMember {
    pub params: NetworkParams<f32>,
    pub report: TrainReport,
    pub seed: u64,
    pub data_stream: u64,
}

pub fn training_data(config: &ExperimentConfig, env: &Environment, member: usize) -> Result<Vec<Sample>> {
    let level = env.scenario.active;
    collect_dataset(env, config.data.samples, config.seed, training_stream(level, member))
}

/// Trains ensemble member `member` on its own data stream and seed.
pub fn train_member(config: &ExperimentConfig, env: &Environment, member: usize) -> Result<TrainedMember> {
    let level = env.scenario.active;
    let data = training_data(config, env, member)?;
    let shape = config.network.shape(&env.scenario)?;
    let train_config = TrainConfig {
        seed: member_seed(config.seed, level, member),
        ..config.train.clone()
    };
    log::info!(
        "training member {member} (k={level}) on {} samples for {} passes",
        data.len(),
        train_config.epochs
    );
    let (params, report) = train::<f32>(&data, shape, &train_config)?;
    Ok(TrainedMember {
        params,
        report,
        seed: train_config.seed,
        data_stream: training_stream(level, member),
    })
}

/// Trains all `train.ensemble` members, in parallel when workers are available.
pub fn train_ensemble(config: &ExperimentConfig, env: &Environment) -> Result<Vec<TrainedMember>> {
    (0..config.train.ensemble)
        .into_par_iter()
        .map(|e| train_member(config, env, e))
        .collect()
}

pub fn parameter_hash<F: crate::daud_net::Scalar>(params: &NetworkParams<F>) -> String {
    Sha256::digest(checkpoint_bytes(params))
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub index: usize,
    pub checkpoint: PathBuf,
    pub sha256: String,
    pub training_seed: u64,
    pub data_stream: u64,
    pub loss_csv: PathBuf,
    pub validation_csv: PathBuf,
}

/// Written after every member so an aborted run leaves a usable record of
/// what finished.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub complete: bool,
    pub seed: u64,
    pub members_expected: usize,
    #[serde(rename = "member")]
    pub members: Vec<MemberRecord>,
}

impl TrainManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Format {
            kind: "training manifest",
            reason: e.to_string(),
        })
    }

    fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Format {
            kind: "training manifest",
            reason: e.to_string(),
        })?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads every member checkpoint, resolving paths against `dir`.
    pub fn load_members(&self, dir: &Path) -> Result<Vec<NetworkParams<f32>>> {
        self.members
            .iter()
            .map(|m| {
                let path = dir.join(&m.checkpoint);
                if !path.is_file() {
                    return Err(Error::MissingCheckpoint {
                        entry: format!("ensemble member {}", m.index),
                        path,
                    });
                }
                crate::daud_net::read_checkpoint(&path)
            })
            .collect()
    }
}

pub(crate) fn write_loss_csv(path: &Path, points: &[LossPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "epoch", "fold", "loss"])?;
    for p in points {
        w.write_record([
            p.iteration.to_string(),
            p.epoch.to_string(),
            p.fold.to_string(),
            p.loss.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Generates the training data, trains the ensemble and writes checkpoints,
/// loss curves and `train_manifest.toml` into `out`.
pub fn train_pipeline(config: &ExperimentConfig, out: &Path) -> Result<TrainManifest> {
    config.validate()?;
    create_dir(out)?;
    let env = Environment::new(config.scenario.clone())?;
    let members = train_ensemble(config, &env)?;
    let manifest_path = out.join("train_manifest.toml");
    let mut manifest = TrainManifest {
        complete: false,
        seed: config.seed,
        members_expected: members.len(),
        members: Vec::new(),
    };
    for (e, member) in members.iter().enumerate() {
        let checkpoint = PathBuf::from(format!("member_{e}.daud"));
        let loss_csv = PathBuf::from(format!("loss_{e}.csv"));
        let validation_csv = PathBuf::from(format!("validation_{e}.csv"));
        let written = crate::daud_net::write_checkpoint(&out.join(&checkpoint), &member.params)
            .and_then(|_| write_loss_csv(&out.join(&loss_csv), &member.report.loss_curve))
            .and_then(|_| write_loss_csv(&out.join(&validation_csv), &member.report.validation_curve));
        if let Err(err) = written {
            manifest.write(&manifest_path)?;
            return Err(err);
        }
        manifest.members.push(MemberRecord {
            index: e,
            checkpoint,
            sha256: parameter_hash(&member.params),
            training_seed: member.seed,
            data_stream: member.data_stream,
            loss_csv,
            validation_csv,
        });
        manifest.write(&manifest_path)?;
    }
    manifest.complete = true;
    manifest.write(&manifest_path)?;
    Ok(manifest)
}

/// Writes the first ensemble member's training records to `out/train.gfna`.
pub fn gen_data(config: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    config.validate()?;
    create_dir(out)?;
    let env = Environment::new(config.scenario.clone())?;
    let data = training_data(config, &env, 0)?;
    let path = out.join("train.gfna");
    write_dataset(&path, DatasetHeader::from_env(&env), data.iter())?;
    Ok(path)
}

/// Trains one detector per sparsity level `1..=bank.max_sparsity`,
/// calibrates its threshold on a separate stream and writes `bank.toml`.
pub fn bank_pipeline(config: &ExperimentConfig, out: &Path) -> Result<(ModelBank<f32>, BankManifest)> {
    config.validate()?;
    create_dir(out)?;
    let levels: Vec<usize> = (1..=config.bank.max_sparsity).collect();
    let trained: Vec<(NetworkParams<f32>, f64)> = levels
        .par_iter()
        .map(|&level| {
            let scenario = crate::signal_model::AudScenario {
                active: level,
                ..config.scenario.clone()
            };
            let env = Environment::new(scenario)?;
            let member = train_member(config, &env, 0)?;
            let calibration = collect_dataset(
                &env,
                config.data.calibration_samples,
                config.seed,
                calibration_stream(level),
            )?;
            let cal = calibrate_tau(&member.params, &calibration, config.bank.quantile)?;
            Ok((member.params, cal.tau))
        })
        .collect::<Result<_>>()?;

    let mut entries = Vec::new();
    for (level, (params, tau)) in levels.iter().zip(&trained) {
        let checkpoint = PathBuf::from(format!("level{level}.daud"));
        crate::daud_net::write_checkpoint(&out.join(&checkpoint), params)?;
        entries.push(ManifestEntry {
            sparsity: *level,
            checkpoint,
            tau: *tau,
        });
    }
    let manifest = BankManifest {
        calibration_quantile: config.bank.quantile,
        levels: entries,
    };
    manifest.write(&out.join("bank.toml"))?;
    let (models, taus) = trained.into_iter().unzip();
    Ok((ModelBank::new(models, taus)?, manifest))
}
