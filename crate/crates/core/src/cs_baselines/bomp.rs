use num_complex::Complex64;

use super::refit::{ls_refit, mmse_refit};
use crate::linalg::norm;
use crate::signal_model::SensingMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Ls,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stopping {
    /// Run exactly `k` iterations.
    FixedK(usize),
    /// Stop once `||r||_2 < epsilon` (checked before every selection).
    ResidualThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BompConfig {
    pub estimator: Estimator,
    pub stopping: Stopping,
    /// `σ_n^2 / σ_x^2`, used by the MMSE estimator only.
    pub mmse_ratio: f64,
}

impl BompConfig {
    pub fn ls(k: usize) -> Self {
        Self {
            estimator: Estimator::Ls,
            stopping: Stopping::FixedK(k),
            mmse_ratio: 0.0,
        }
    }

    pub fn mmse(k: usize, ratio: f64) -> Self {
        Self {
            estimator: Estimator::Mmse,
            stopping: Stopping::FixedK(k),
            mmse_ratio: ratio,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// Selected blocks in selection order.
    pub support: Vec<usize>,
    /// Refit coefficients per selected block, aligned with `support`.
    pub x_hat: Vec<Vec<Complex64>>,
    /// `||r^j||_2` after each iteration.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    /// Some refit needed diagonal loading.
    pub regularized: bool,
}

impl RecoveryResult {
    pub fn sorted_support(&self) -> Vec<usize> {
        let mut s = self.support.clone();
        s.sort_unstable();
        s
    }
}

/// Block orthogonal matching pursuit.
///
/// Each iteration picks the unselected block maximizing `||Φ_l^H r||_2^2`
/// (lowest index on ties), refits on the accumulated support and updates the
/// residual `r = y - Φ_Ω x`.
pub fn bomp(y: &[Complex64], phi: &SensingMatrix, config: &BompConfig) -> Result<RecoveryResult> {
    if y.len() != phi.rows() {
        return Err(Error::Shape(format!("y has {} entries, Φ has {} rows", y.len(), phi.rows())));
    }
    let n = phi.devices();
    let max_iters = match config.stopping {
        Stopping::FixedK(k) => {
            if k > n {
                return Err(Error::InvalidInput(format!("k={k} exceeds N={n}")));
            }
            k
        }
        Stopping::ResidualThreshold(eps) => {
            if !(eps > 0.0) {
                return Err(Error::InvalidInput(format!("residual threshold must be positive, got {eps}")));
            }
            n
        }
    };
    if config.estimator == Estimator::Mmse && !(config.mmse_ratio >= 0.0) {
        return Err(Error::InvalidInput(format!("MMSE ratio must be >= 0, got {}", config.mmse_ratio)));
    }

    let w = phi.block_width();
    let mut selected = vec![false; n];
    let mut support = Vec::new();
    let mut residual = y.to_vec();
    let mut residual_norms = Vec::new();
    let mut x_full = Vec::new();
    let mut regularized = false;

    while support.len() < max_iters {
        if let Stopping::ResidualThreshold(eps) = config.stopping {
            if norm(&residual) < eps {
                break;
            }
        }
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for l in (0..n).filter(|&l| !selected[l]) {
            let score = phi.block_correlation(l, &residual);
            if score > best_score {
                best_score = score;
                best = Some(l);
            }
        }
        let Some(pick) = best else { break };
        selected[pick] = true;
        support.push(pick);

        let (sub, map) = phi.submatrix(&support, true);
        let fit = match config.estimator {
            Estimator::Ls => ls_refit(&sub, y),
            Estimator::Mmse => mmse_refit(&sub, y, config.mmse_ratio)?,
        };
        regularized |= fit.regularized;
        let fitted = sub.mul_vec(&fit.x);
        for (r, (yi, fi)) in residual.iter_mut().zip(y.iter().zip(&fitted)) {
            *r = yi - fi;
        }
        residual_norms.push(norm(&residual));
        x_full = vec![Complex64::new(0.0, 0.0); support.len() * w];
        for (&offset, v) in map.iter().zip(&fit.x) {
            x_full[offset] = *v;
        }
    }
    if regularized {
        log::warn!("bomp: rank-deficient refit regularized with diagonal loading");
    }
    let x_hat = x_full.chunks(w.max(1)).map(<[Complex64]>::to_vec).collect();
    Ok(RecoveryResult {
        iterations: support.len(),
        support,
        x_hat,
        residual_norms,
        regularized,
    })
}
