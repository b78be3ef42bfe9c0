//! Building blocks of the detector operating on row-major batches
//! (`rows x features`).

use rand::Rng;

use super::params::BatchNorm;
use super::scalar::Scalar;
use crate::error::{Error, Result};

pub const BN_EPSILON: f64 = 1e-5;
pub const LOG_CLAMP: f64 = 1e-12;

/// Batch statistics captured by a training-mode batch norm.
#[derive(Clone, Debug)]
pub struct BnBatch<F> {
    pub normalized: Vec<F>,
    pub inv_std: Vec<F>,
    pub mean: Vec<F>,
    pub var: Vec<F>,
}

/// Training-mode batch norm over the batch statistics.
pub fn batch_norm_train<F: Scalar>(z: &[F], features: usize, bn: &BatchNorm<F>) -> Result<(Vec<F>, BnBatch<F>)> {
    let rows = batch_rows(z, features)?;
    if rows < 2 {
        return Err(Error::InvalidBatch(
            "training-mode batch norm needs at least two samples".into(),
        ));
    }
    let n = F::of(rows as f64);
    let mut mean = vec![F::zero(); features];
    for row in z.chunks_exact(features) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m = *m + v;
        }
    }
    mean.iter_mut().for_each(|m| *m = *m / n);
    let mut var = vec![F::zero(); features];
    for row in z.chunks_exact(features) {
        for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
            *s = *s + (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s = *s / n);
    let eps = F::of(BN_EPSILON);
    let inv_std: Vec<F> = var.iter().map(|&s| F::one() / (s + eps).sqrt()).collect();

    let mut normalized = vec![F::zero(); z.len()];
    let mut out = vec![F::zero(); z.len()];
    for (r, row) in z.chunks_exact(features).enumerate() {
        for j in 0..features {
            let h = (row[j] - mean[j]) * inv_std[j];
            normalized[r * features + j] = h;
            out[r * features + j] = bn.scale[j] * h + bn.shift[j];
        }
    }
    Ok((
        out,
        BnBatch {
            normalized,
            inv_std,
            mean,
            var,
        },
    ))
}

/// Inference-mode batch norm using the running statistics.
pub fn batch_norm_eval<F: Scalar>(z: &[F], features: usize, bn: &BatchNorm<F>) -> Result<Vec<F>> {
    batch_rows(z, features)?;
    let eps = F::of(BN_EPSILON);
    let gain: Vec<F> = (0..features)
        .map(|j| bn.scale[j] / (bn.running_var[j] + eps).sqrt())
        .collect();
    let mut out = z.to_vec();
    for row in out.chunks_exact_mut(features) {
        for j in 0..features {
            row[j] = gain[j] * (row[j] - bn.running_mean[j]) + bn.shift[j];
        }
    }
    Ok(out)
}

impl<F: Scalar> BatchNorm<F> {
    /// Exponential moving average toward the latest batch statistics.
    pub fn update_running(&mut self, batch: &BnBatch<F>, momentum: F) {
        let keep = F::one() - momentum;
        for j in 0..self.running_mean.len() {
            self.running_mean[j] = keep * self.running_mean[j] + momentum * batch.mean[j];
            self.running_var[j] = keep * self.running_var[j] + momentum * batch.var[j];
        }
    }
}

fn batch_rows<F>(z: &[F], features: usize) -> Result<usize> {
    if features == 0 || z.len() % features != 0 {
        return Err(Error::Shape(format!(
            "batch of length {} is not a whole number of {features}-feature rows",
            z.len()
        )));
    }
    Ok(z.len() / features)
}

pub fn relu<F: Scalar>(v: &[F]) -> Vec<F> {
    v.iter().map(|&x| x.max(F::zero())).collect()
}

/// Bernoulli keep-mask: each entry is dropped with probability `prob`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, prob: f64, rng: &mut R) -> Vec<bool> {
    if prob <= 0.0 {
        return vec![true; len];
    }
    (0..len).map(|_| rng.random::<f64>() >= prob).collect()
}

/// Applies a keep-mask with inverted scaling so the expectation is unchanged.
pub fn apply_dropout<F: Scalar>(v: &[F], mask: &[bool], prob: f64) -> Vec<F> {
    let keep = F::of(1.0 / (1.0 - prob));
    v.iter()
        .zip(mask)
        .map(|(&x, &m)| if m { x * keep } else { F::zero() })
        .collect()
}

/// Training-mode dropout when `rng` is given, identity otherwise.
pub fn dropout<F: Scalar, R: Rng + ?Sized>(v: &[F], prob: f64, rng: Option<&mut R>) -> Result<(Vec<F>, Vec<bool>)> {
    if !(0.0..1.0).contains(&prob) {
        return Err(Error::InvalidConfig(format!("dropout probability {prob} outside [0, 1)")));
    }
    match rng {
        Some(rng) => {
            let mask = dropout_mask(v.len(), prob, rng);
            Ok((apply_dropout(v, &mask, prob), mask))
        }
        None => Ok((v.to_vec(), vec![true; v.len()])),
    }
}

/// Row-wise softmax, shifted by the row maximum for stability.
pub fn softmax_rows<F: Scalar>(logits: &[F], outputs: usize) -> Vec<F> {
    let mut out = logits.to_vec();
    for row in out.chunks_exact_mut(outputs) {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut total = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total = total + *v;
        }
        row.iter_mut().for_each(|v| *v = *v / total);
    }
    out
}

/// Indices of the `k` largest probabilities, lowest index first on ties,
/// returned in ascending order.
pub fn select_support<F: Scalar>(probs: &[F], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > probs.len() {
        return Err(Error::InvalidInput(format!(
            "cannot select {k} of {} entries",
            probs.len()
        )));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

/// Cross-entropy against the uniform target over `support`.
pub fn cross_entropy_loss<F: Scalar>(probs: &[F], support: &[usize]) -> Result<F> {
    if support.is_empty() {
        return Err(Error::InvalidInput("empty support".into()));
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= probs.len()) {
        return Err(Error::InvalidInput(format!("support index {bad} out of range")));
    }
    let clamp = F::of(LOG_CLAMP);
    let total: F = support.iter().map(|&i| probs[i].max(clamp).ln()).sum();
    Ok(-total / F::of(support.len() as f64))
}

/// KL divergence from the uniform target over `support` to `probs`.
pub fn kl_divergence<F: Scalar>(probs: &[F], support: &[usize]) -> Result<F> {
    if support.is_empty() {
        return Err(Error::InvalidInput("empty support".into()));
    }
    let target = F::one() / F::of(support.len() as f64);
    let clamp = F::of(LOG_CLAMP);
    Ok(support
        .iter()
        .map(|&i| target * (target / probs[i].max(clamp)).ln())
        .sum())
}

/// Mean cross-entropy over a batch of softmax rows.
pub fn batch_cross_entropy<F: Scalar>(probs: &[F], outputs: usize, supports: &[Vec<usize>]) -> Result<F> {
    if probs.len() != outputs * supports.len() {
        return Err(Error::Shape("probabilities and supports disagree on batch size".into()));
    }
    let mut total = F::zero();
    for (row, support) in probs.chunks_exact(outputs).zip(supports) {
        total = total + cross_entropy_loss(row, support)?;
    }
    Ok(total / F::of(supports.len() as f64))
}
