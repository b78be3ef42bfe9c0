use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::create_dir;
use super::sweep::{mean_and_half_width, success_probability};
use crate::error::{Error, Result};
use crate::rng::{record_stream, streams};
use crate::signal_model::{real_split, AudScenario, Environment};
use crate::sparsity_est::{estimate_with_bank, BankManifest, ModelBank, TauPolicy};

/// Per true-sparsity summary of blind estimation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub true_sparsity: usize,
    pub trials: usize,
    /// Fraction of trials with `k_hat == k`.
    pub exact_rate: f64,
    pub unresolved: usize,
    pub p_succ: f64,
    pub ci_half_width: f64,
}

/// Test stream for blind estimation at sparsity `k`.
pub fn estimate_stream(k: usize) -> u64 {
    streams::TEST_BASE + 100 + k as u64
}

/// Scores blind sparsity estimation with `bank` on fresh instances for every
/// configured sparsity level.
pub fn evaluate_bank(config: &ExperimentConfig, bank: &ModelBank<f32>) -> Result<Vec<EstimateRow>> {
    let policy = config.bank.global_tau.map_or(TauPolicy::PerLevel, TauPolicy::Global);
    let mut rows = Vec::new();
    for &k in &config.estimate.sparsity {
        let scenario = AudScenario {
            active: k,
            ..config.scenario.with_snr_db(config.estimate.snr_db)
        };
        let env = Environment::new(scenario)?;
        let mut exact = 0;
        let mut unresolved = 0;
        let mut scores = Vec::with_capacity(config.estimate.trials);
        for i in 0..config.estimate.trials as u64 {
            let inst = env.synthesize(&mut record_stream(config.seed, estimate_stream(k), i))?;
            let input: Vec<f32> = real_split(&inst.y).into_iter().map(|v| v as f32).collect();
            let est = estimate_with_bank(&input, bank, policy)?;
            exact += usize::from(est.sparsity == k);
            unresolved += usize::from(!est.resolved);
            scores.push(success_probability(&est.support, &inst.support)?);
        }
        let (p_succ, ci_half_width) = mean_and_half_width(&scores);
        rows.push(EstimateRow {
            true_sparsity: k,
            trials: config.estimate.trials,
            exact_rate: exact as f64 / config.estimate.trials.max(1) as f64,
            unresolved,
            p_succ,
            ci_half_width,
        });
    }
    Ok(rows)
}

/// Loads the bank manifest and writes `estimate.csv` into `out`.
pub fn run_estimate(config: &ExperimentConfig, out: &Path) -> Result<Vec<EstimateRow>> {
    config.validate()?;
    create_dir(out)?;
    let manifest = config.bank.manifest.clone().unwrap_or_else(|| out.join("bank.toml"));
    if !manifest.is_file() {
        return Err(Error::MissingCheckpoint {
            entry: "bank manifest".into(),
            path: manifest,
        });
    }
    let bank: ModelBank<f32> = BankManifest::load_bank(&manifest)?;
    let rows = evaluate_bank(config, &bank)?;
    let path = out.join("estimate.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
