//! Blind sparsity estimation with a bank of detectors, one per sparsity
//! level. Level `l` is run for `l = 1, 2, ..` until the number of devices whose
//! probability is within a factor `τ` of the maximum equals `l`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::daud_net::{predict, read_checkpoint, stack_inputs, NetworkParams, NetworkShape, Scalar};
use crate::error::{Error, Result};
use crate::signal_model::Sample;

/// Anything that yields a probability vector per sparsity level. The model
/// bank is the real implementation; tests substitute idealized outputs.
pub trait LevelPredictor {
    fn max_level(&self) -> usize;
    fn outputs(&self) -> usize;
    fn probabilities(&self, level: usize, input: &[f32]) -> Result<Vec<f64>>;
}

#[derive(Clone, Debug)]
pub struct ModelBank<F> {
    models: Vec<NetworkParams<F>>,
    taus: Vec<f64>,
}

impl<F: Scalar> ModelBank<F> {
    /// `models[l - 1]` is the detector trained for sparsity `l`.
    pub fn new(models: Vec<NetworkParams<F>>, taus: Vec<f64>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidInput("a model bank needs at least one level".into()))?;
        let shape: NetworkShape = first.shape;
        if models.iter().any(|m| m.shape.input_dim != shape.input_dim || m.shape.outputs != shape.outputs) {
            return Err(Error::InvalidInput("bank models disagree on input or output size".into()));
        }
        if taus.len() != models.len() {
            return Err(Error::InvalidInput(format!(
                "{} thresholds for {} levels",
                taus.len(),
                models.len()
            )));
        }
        if let Some(bad) = taus.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::InvalidInput(format!("threshold {bad} outside (0, 1]")));
        }
        Ok(ModelBank { models, taus })
    }

    pub fn levels(&self) -> usize {
        self.models.len()
    }

    pub fn model(&self, level: usize) -> &NetworkParams<F> {
        &self.models[level - 1]
    }

    pub fn tau(&self, level: usize) -> f64 {
        self.taus[level - 1]
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }
}

impl<F: Scalar> LevelPredictor for ModelBank<F> {
    fn max_level(&self) -> usize {
        self.levels()
    }

    fn outputs(&self) -> usize {
        self.models[0].shape.outputs
    }

    fn probabilities(&self, level: usize, input: &[f32]) -> Result<Vec<f64>> {
        let x: Vec<F> = input.iter().map(|&v| F::of(f64::from(v))).collect();
        let probs = predict(self.model(level), &x)?;
        Ok(probs.iter().map(|p| p.to_f64().unwrap_or(0.0)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdCalibration {
    pub tau: f64,
    pub quantile: f64,
    pub samples: usize,
}

/// Smallest admissible threshold; keeps τ strictly positive.
const TAU_FLOOR: f64 = 1e-12;

/// Lower `quantile` of `scores` (0 = minimum), clamped into (0, 1].
pub fn tau_from_scores(scores: &[f64], quantile: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no calibration scores".into()));
    }
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::InvalidInput(format!("quantile {quantile} outside [0, 1]")));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = (quantile * (sorted.len() - 1) as f64).floor() as usize;
    Ok(sorted[idx].clamp(TAU_FLOOR, 1.0))
}

/// `p̂_ω / p̂_max` for every true support element of every row.
pub fn ratio_scores(probs: &[f64], outputs: usize, supports: &[Vec<usize>]) -> Vec<f64> {
    probs
        .chunks_exact(outputs)
        .zip(supports)
        .flat_map(|(row, support)| {
            let max = row.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
            support.iter().map(move |&i| row[i] / max)
        })
        .collect()
}

/// `k · p̂_ω` for every true support element of every row.
pub fn scaled_scores(probs: &[f64], outputs: usize, supports: &[Vec<usize>]) -> Vec<f64> {
    probs
        .chunks_exact(outputs)
        .zip(supports)
        .flat_map(|(row, support)| {
            let k = support.len() as f64;
            support.iter().map(move |&i| k * row[i])
        })
        .collect()
}

/// Calibrates τ in ratio space from precomputed probability rows.
pub fn calibrate_tau_from_probs(
    probs: &[f64],
    outputs: usize,
    supports: &[Vec<usize>],
    quantile: f64,
) -> Result<ThresholdCalibration> {
    if supports.is_empty() {
        return Err(Error::InvalidInput("empty validation set".into()));
    }
    if probs.len() != outputs * supports.len() {
        return Err(Error::Shape("probabilities and supports disagree on row count".into()));
    }
    let tau = tau_from_scores(&ratio_scores(probs, outputs, supports), quantile)?;
    Ok(ThresholdCalibration {
        tau,
        quantile,
        samples: supports.len(),
    })
}

pub fn calibrate_tau<F: Scalar>(
    model: &NetworkParams<F>,
    validation: &[Sample],
    quantile: f64,
) -> Result<ThresholdCalibration> {
    if validation.is_empty() {
        return Err(Error::InvalidInput("empty validation set".into()));
    }
    let refs: Vec<&Sample> = validation.iter().collect();
    let probs: Vec<f64> = predict(model, &stack_inputs::<F>(&refs))?
        .iter()
        .map(|p| p.to_f64().unwrap_or(0.0))
        .collect();
    let supports: Vec<Vec<usize>> = validation.iter().map(|s| s.support.clone()).collect();
    calibrate_tau_from_probs(&probs, model.shape.outputs, &supports, quantile)
}

/// Threshold used at each level: the bank's own per-level values or one
/// global value.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum TauPolicy {
    #[default]
    PerLevel,
    Global(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsityEstimate {
    pub sparsity: usize,
    pub support: Vec<usize>,
    /// False when every level was tried without `|Γ| = l`.
    pub resolved: bool,
}

/// Indices whose probability is at least `tau` times the largest one.
pub fn candidate_set(probs: &[f64], tau: f64) -> Vec<usize> {
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    probs
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p / max >= tau)
        .map(|(i, _)| i)
        .collect()
}

pub fn estimate_sparsity<P: LevelPredictor + ?Sized>(
    input: &[f32],
    bank: &P,
    taus: impl Fn(usize) -> f64,
) -> Result<SparsityEstimate> {
    let max_level = bank.max_level();
    if max_level == 0 {
        return Err(Error::InvalidInput("empty model bank".into()));
    }
    let mut level = 0;
    let mut gamma: Vec<usize> = (0..bank.outputs()).collect();
    while level != gamma.len() {
        if level == max_level {
            return Ok(SparsityEstimate {
                sparsity: level,
                support: gamma,
                resolved: false,
            });
        }
        level += 1;
        let tau = taus(level);
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidInput(format!("threshold {tau} outside (0, 1]")));
        }
        gamma = candidate_set(&bank.probabilities(level, input)?, tau);
    }
    Ok(SparsityEstimate {
        sparsity: level,
        support: gamma,
        resolved: true,
    })
}

/// Runs the estimator against a model bank with the chosen threshold policy.
pub fn estimate_with_bank<F: Scalar>(input: &[f32], bank: &ModelBank<F>, policy: TauPolicy) -> Result<SparsityEstimate> {
    match policy {
        TauPolicy::PerLevel => estimate_sparsity(input, bank, |l| bank.tau(l)),
        TauPolicy::Global(t) => estimate_sparsity(input, bank, |_| t),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub sparsity: usize,
    pub checkpoint: PathBuf,
    pub tau: f64,
}

/// On-disk bank description. Checkpoint paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankManifest {
    #[serde(default)]
    pub calibration_quantile: f64,
    #[serde(rename = "level")]
    pub levels: Vec<ManifestEntry>,
}

impl BankManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Format {
            kind: "bank manifest",
            reason: e.to_string(),
        })?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: BankManifest = toml::from_str(&text).map_err(|e| Error::Format {
            kind: "bank manifest",
            reason: e.to_string(),
        })?;
        for (i, entry) in manifest.levels.iter().enumerate() {
            if entry.sparsity != i + 1 {
                return Err(Error::Format {
                    kind: "bank manifest",
                    reason: format!("levels must run 1..K in order, entry {} has level {}", i + 1, entry.sparsity),
                });
            }
        }
        Ok(manifest)
    }

    /// Loads every checkpoint listed in the manifest at `path`.
    pub fn load_bank<F: Scalar>(path: &Path) -> Result<ModelBank<F>> {
        let manifest = Self::read(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut models = Vec::with_capacity(manifest.levels.len());
        for entry in &manifest.levels {
            let file = base.join(&entry.checkpoint);
            if !file.is_file() {
                return Err(Error::MissingCheckpoint {
                    entry: format!("level {}", entry.sparsity),
                    path: file,
                });
            }
            models.push(read_checkpoint(&file)?);
        }
        ModelBank::new(models, manifest.levels.iter().map(|e| e.tau).collect())
    }
}
