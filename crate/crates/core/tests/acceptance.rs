//! Acceptance suite. Runs every headline criterion at its stated tolerance,
//! prints one PASS/FAIL line per criterion and exits nonzero if any failed.
//!
//! Trained models are shared between criteria, so the whole suite trains
//! each desk-scale ensemble once.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use gfna::complexity::{flops_daud, flops_ls_bomp, flops_mmse_bomp};
use gfna::cs_baselines::{bomp, oracle_exhaustive, BompConfig};
use gfna::daud_net::{
    backward, batch_cross_entropy, cross_entropy_loss, forward, kl_divergence, Activation, Dropout, Mode,
    NetworkParams, NetworkShape,
};
use gfna::harness::{
    bank_pipeline, evaluate_algorithms, run_sweep, test_instances, train_ensemble, train_pipeline, Algorithm,
    ExperimentConfig,
};
use gfna::rng::{record_stream, stream, streams};
use gfna::signal_model::{generate_disjoint_codebook, real_split, AudScenario, Environment};
use gfna::sparsity_est::{estimate_sparsity, estimate_with_bank, LevelPredictor, TauPolicy};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

type Models = Vec<NetworkParams<f32>>;

/// Desk-scale ensembles keyed by (k, antennas), trained on first request.
#[derive(Default)]
struct ModelCache {
    ensembles: BTreeMap<(usize, usize), (Environment, Models)>,
}

impl ModelCache {
    fn ensemble(&mut self, active: usize, antennas: usize) -> &(Environment, Models) {
        self.ensembles.entry((active, antennas)).or_insert_with(|| {
            let config = desk_config(active, antennas);
            let env = Environment::new(config.scenario.clone()).expect("desk scenario is valid");
            let models = train_ensemble(&config, &env)
                .expect("desk training succeeds")
                .into_iter()
                .map(|m| m.params)
                .collect();
            (env, models)
        })
    }
}

fn desk_config(active: usize, antennas: usize) -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    config.scenario.active = active;
    config.scenario.antennas = antennas;
    config
}

fn p_succ(
    env: &Environment,
    models: &[NetworkParams<f32>],
    snr_db: f64,
    trials: usize,
    algorithms: &[Algorithm],
) -> Vec<f64> {
    let (test_env, instances) = test_instances(env, snr_db, trials, 0).expect("test instances");
    evaluate_algorithms(&test_env, &instances, algorithms, models)
        .expect("evaluation succeeds")
        .iter()
        .map(|s| s.p_succ)
        .collect()
}

fn table_exactness() -> Outcome {
    let out = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let run = Command::new(env!("CARGO_BIN_EXE_gfna"))
        .args(["flops", "--table1", "--out"])
        .arg(out.path())
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&run.stdout);
    let expected = [
        ("D-AUD", ["4.99e6", "5.59e6", "6.19e6"]),
        ("MMSE-BOMP", ["7.91e6", "1.30e7", "1.92e7"]),
        ("LS-BOMP", ["1.68e7", "4.29e7", "9.19e7"]),
    ];
    let mut matched = 0;
    for (name, cells) in expected {
        if let Some(line) = stdout.lines().find(|l| l.split_whitespace().next() == Some(name)) {
            let printed: Vec<&str> = line.split_whitespace().skip(1).take(3).collect();
            matched += printed.iter().zip(cells).filter(|(a, b)| **a == *b).count();
        }
    }
    Outcome::new(
        run.status.success() && matched == 9 && elapsed < Duration::from_secs(1),
        format!("{matched}/9 cells match, {:.3} s", elapsed.as_secs_f64()),
    )
}

fn relative_complexity() -> Outcome {
    let daud = flops_daud(80, 40, 500, 6, 8, true).unwrap().total;
    let mmse = flops_mmse_bomp(80, 40, 8).unwrap().total;
    let ls = flops_ls_bomp(80, 40, 8).unwrap().total;
    let below_mmse = 100.0 * (1.0 - daud / mmse);
    let below_ls = 100.0 * (1.0 - daud / ls);
    Outcome::new(
        (56.0..=58.0).contains(&below_mmse) && (86.0..=88.0).contains(&below_ls),
        format!("{below_mmse:.2}% below MMSE-BOMP, {below_ls:.2}% below LS-BOMP"),
    )
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let rows = 4;
    let prob = 0.25;
    let mut worst: f64 = 0.0;
    for activation in [Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
        let shape = NetworkShape::new(6, 8, 2, 4).unwrap().with_activation(activation);
        let mut rng = stream(11, 0);
        let params: NetworkParams<f64> = NetworkParams::init(shape, &mut rng);
        let batch: Vec<f64> = (0..rows * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let masks: Vec<Vec<bool>> = (0..2)
            .map(|_| (0..rows * 8).map(|_| rng.random::<f64>() >= prob).collect())
            .collect();
        let supports = vec![vec![0, 2], vec![1, 3], vec![0, 1], vec![2, 3]];
        let loss = |p: &NetworkParams<f64>| {
            let mode = Mode::Train(Dropout::Fixed { prob, masks: &masks });
            let (probs, _) = forward(p, &batch, mode).unwrap();
            batch_cross_entropy(&probs, 4, &supports).unwrap()
        };
        let mode = Mode::Train(Dropout::Fixed { prob, masks: &masks });
        let (_, cache) = forward(&params, &batch, mode).unwrap();
        let grads = backward(&params, &cache.unwrap(), &supports).unwrap();
        let analytic: Vec<Vec<f64>> = grads.trainable().iter().map(|t| t.to_vec()).collect();
        let h = 1e-5;
        for (t, tensor) in analytic.iter().enumerate() {
            for (i, &a) in tensor.iter().enumerate() {
                let mut plus = params.clone();
                plus.trainable_mut()[t][i] += h;
                let mut minus = params.clone();
                minus.trainable_mut()[t][i] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(err);
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-4 && elapsed < Duration::from_secs(10),
        format!("max relative error {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn loss_identity() -> Outcome {
    let mut rng = stream(12, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=40);
        let k = rng.random_range(1..n);
        let support: Vec<usize> = sample(&mut rng, n, k).into_vec();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let j = cross_entropy_loss(&probs, &support).unwrap();
        let kl = kl_divergence(&probs, &support).unwrap();
        let target = 1.0 / k as f64;
        let kl_direct: f64 = support.iter().map(|&i| target * (target / probs[i]).ln()).sum();
        let gap = (kl - (j - (k as f64).ln())).abs().max((kl - kl_direct).abs());
        worst = worst.max(gap);
    }
    Outcome::new(worst <= 1e-12, format!("max |KL - (J - log k)| = {worst:.2e}"))
}

fn bomp_oracle_equivalence() -> Outcome {
    let scenario = AudScenario {
        devices: 8,
        subcarriers: 16,
        nonzeros: 4,
        active: 2,
        measurements: 1,
        ..AudScenario::desk()
    }
    .with_snr_db(30.0);
    let env = Environment::new(scenario).unwrap();
    let trials = 500;
    let mut agree = 0;
    for i in 0..trials {
        let inst = env.synthesize(&mut record_stream(13, streams::TEST_BASE, i)).unwrap();
        let greedy = bomp(&inst.y, env.sensing(), &BompConfig::ls(2)).unwrap().sorted_support();
        let best = oracle_exhaustive(&inst.y, env.sensing(), 2).unwrap().support;
        agree += usize::from(greedy == best);
    }
    let noisy_rate = agree as f64 / trials as f64;

    let disjoint = AudScenario {
        devices: 8,
        subcarriers: 16,
        nonzeros: 2,
        active: 2,
        measurements: 1,
        ..AudScenario::desk()
    };
    let codebook = generate_disjoint_codebook(16, 8, 2, &mut stream(13, streams::CODEBOOK)).unwrap();
    let env = Environment::with_codebook(disjoint, codebook).unwrap();
    let mut exact = 0;
    let mut worst_residual: f64 = 0.0;
    for i in 0..trials {
        let inst = env.synthesize(&mut record_stream(13, streams::TEST_BASE + 1, i)).unwrap();
        let y: Vec<Complex64> = env.sensing().apply(&inst.sparse_x(8));
        let greedy = bomp(&y, env.sensing(), &BompConfig::ls(2)).unwrap();
        let best = oracle_exhaustive(&y, env.sensing(), 2).unwrap().support;
        exact += usize::from(greedy.sorted_support() == best && best == inst.support);
        worst_residual = worst_residual.max(*greedy.residual_norms.last().unwrap());
    }
    Outcome::new(
        noisy_rate >= 0.95 && exact == trials as usize && worst_residual <= 1e-9,
        format!(
            "30 dB agreement {noisy_rate:.3}; noiseless orthogonal blocks {exact}/{trials} exact, max residual {worst_residual:.1e}"
        ),
    )
}

fn desk_end_to_end(cache: &mut ModelCache) -> Outcome {
    let start = Instant::now();
    let (env, models) = cache.ensemble(2, 1);
    let algorithms = [Algorithm::DaudEnsemble, Algorithm::LsBomp];
    let grid = [5.0, 10.0, 15.0, 20.0, 25.0];
    let curves: Vec<Vec<f64>> = grid
        .iter()
        .map(|&snr| p_succ(env, models, snr, 5000, &algorithms))
        .collect();
    let elapsed = start.elapsed();
    let at20 = &curves[3];
    let monotone = (0..algorithms.len()).all(|a| curves.windows(2).all(|w| w[1][a] >= w[0][a] - 0.02));
    let daud: Vec<String> = curves.iter().map(|c| format!("{:.3}", c[0])).collect();
    Outcome::new(
        at20[0] >= 0.85 && at20[0] > at20[1] && monotone && elapsed < Duration::from_secs(1800),
        format!(
            "20 dB: ensemble {:.3} vs LS-BOMP {:.3}; ensemble over 5..25 dB [{}]; monotone {monotone}; {:.0} s",
            at20[0],
            at20[1],
            daud.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn sparsity_robustness(cache: &mut ModelCache) -> Outcome {
    let algorithms = [Algorithm::DaudEnsemble, Algorithm::LsBomp];
    let (env, models) = cache.ensemble(2, 1);
    let low = p_succ(env, models, 20.0, 5000, &algorithms);
    let (env, models) = cache.ensemble(4, 1);
    let high = p_succ(env, models, 20.0, 5000, &algorithms);
    let daud_drop = low[0] - high[0];
    let bomp_drop = low[1] - high[1];
    Outcome::new(
        bomp_drop - daud_drop > 0.0,
        format!(
            "k 2->4: D-AUD {:.3}->{:.3} (drop {daud_drop:.3}), LS-BOMP {:.3}->{:.3} (drop {bomp_drop:.3})",
            low[0], high[0], low[1], high[1]
        ),
    )
}

struct IdealSoftmax {
    support: Vec<usize>,
    noise: Vec<f64>,
    max_level: usize,
}

impl LevelPredictor for IdealSoftmax {
    fn max_level(&self) -> usize {
        self.max_level
    }

    fn outputs(&self) -> usize {
        self.noise.len()
    }

    fn probabilities(&self, _level: usize, _input: &[f32]) -> gfna::Result<Vec<f64>> {
        let k = self.support.len() as f64;
        Ok((0..self.noise.len())
            .map(|i| if self.support.contains(&i) { 1.0 / k } else { self.noise[i] })
            .collect())
    }
}

fn sparsity_estimation(out: &Path) -> Outcome {
    let mut rng = stream(14, 0);
    let max_level = 6;
    let mut ideal_exact = 0;
    let ideal_trials = 1000;
    for _ in 0..ideal_trials {
        let n = 20;
        let k = rng.random_range(1..=max_level);
        let mut support = sample(&mut rng, n, k).into_vec();
        support.sort_unstable();
        let noise = (0..n).map(|_| rng.random_range(0.0..=0.01)).collect();
        let oracle = IdealSoftmax {
            support: support.clone(),
            noise,
            max_level,
        };
        let est = estimate_sparsity(&[], &oracle, |_| 0.5).unwrap();
        ideal_exact += usize::from(est.resolved && est.sparsity == k && est.support == support);
    }

    let mut config = ExperimentConfig::default();
    config.bank.max_sparsity = 4;
    let (bank, _) = bank_pipeline(&config, out).expect("bank trains");
    let trials = 500;
    let mut hits = 0;
    let mut per_level = Vec::new();
    for k in 1..=4 {
        let scenario = AudScenario {
            active: k,
            ..config.scenario.with_snr_db(25.0)
        };
        let env = Environment::new(scenario).unwrap();
        let mut level_hits = 0;
        for i in 0..trials {
            let inst = env.synthesize(&mut record_stream(14, streams::TEST_BASE + k as u64, i)).unwrap();
            let input: Vec<f32> = real_split(&inst.y).into_iter().map(|v| v as f32).collect();
            let est = estimate_with_bank(&input, &bank, TauPolicy::PerLevel).unwrap();
            level_hits += usize::from(est.sparsity == k);
        }
        hits += level_hits;
        per_level.push(format!("{:.2}", level_hits as f64 / trials as f64));
    }
    let bank_rate = hits as f64 / (4 * trials) as f64;
    Outcome::new(
        ideal_exact == ideal_trials && bank_rate >= 0.8,
        format!(
            "ideal softmax {ideal_exact}/{ideal_trials} exact; trained bank k_hat = k on {bank_rate:.3} at 25 dB (k=1..4: {})",
            per_level.join(", ")
        ),
    )
}

fn multi_antenna(cache: &mut ModelCache) -> Outcome {
    let algorithms = [Algorithm::DaudEnsemble];
    let (env, models) = cache.ensemble(2, 1);
    let single = p_succ(env, models, 20.0, 5000, &algorithms)[0];
    let (env, models) = cache.ensemble(2, 2);
    let dual = p_succ(env, models, 20.0, 5000, &algorithms)[0];
    Outcome::new(
        dual >= single - 0.02,
        format!("20 dB: M=1 {single:.3}, M=2 {dual:.3}"),
    )
}

fn determinism() -> Outcome {
    let mut config = ExperimentConfig::default();
    config.seed = 7;
    config.data.samples = 4000;
    config.train.epochs = 3;
    config.sweep.values = vec![10.0, 20.0];
    config.sweep.trials = 200;
    config.sweep.algorithms = vec![Algorithm::DaudEnsemble, Algorithm::LsBomp];
    let run = |dir: &Path| {
        train_pipeline(&config, dir).expect("training runs");
        run_sweep(&config, &dir.join("sweep")).expect("sweep runs");
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    let files = [
        "member_0.daud",
        "member_1.daud",
        "loss_0.csv",
        "loss_1.csv",
        "validation_0.csv",
        "validation_1.csv",
        "train_manifest.toml",
        "sweep/sweep.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(a.path().join(f)).ok() != fs::read(b.path().join(f)).ok())
        .collect();
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts bit-identical across two runs", files.len())
        } else {
            format!("differing artifacts: {differing:?}")
        },
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()));
    let bank_dir = tempfile::tempdir().expect("tempdir");
    let mut cache = ModelCache::default();

    let criteria: Vec<(&str, Box<dyn FnOnce(&mut ModelCache) -> Outcome + '_>)> = vec![
        ("flop_table_exactness", Box::new(|_| table_exactness())),
        ("relative_complexity_at_k8", Box::new(|_| relative_complexity())),
        ("gradient_finite_difference_oracle", Box::new(|_| gradient_oracle())),
        ("kl_cross_entropy_identity", Box::new(|_| loss_identity())),
        ("bomp_exhaustive_equivalence", Box::new(|_| bomp_oracle_equivalence())),
        ("desk_end_to_end", Box::new(desk_end_to_end)),
        ("sparsity_robustness_k2_to_k4", Box::new(sparsity_robustness)),
        ("sparsity_estimation", Box::new(|_| sparsity_estimation(bank_dir.path()))),
        ("multi_antenna_trend", Box::new(multi_antenna)),
        ("determinism", Box::new(|_| determinism())),
    ];

    let mut failures = 0;
    for (name, check) in criteria {
        if !selected(name) {
            continue;
        }
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| check(&mut cache)))
            .unwrap_or_else(|_| Outcome::new(false, "panicked"));
        failures += usize::from(!outcome.pass);
        println!("{} {name}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
