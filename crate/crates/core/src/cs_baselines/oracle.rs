use num_complex::Complex64;

use super::refit::ls_refit;
use crate::linalg::norm_sqr;
use crate::signal_model::SensingMatrix;
use crate::{Error, Result};

/// Largest number of candidate supports the oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 1_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub support: Vec<usize>,
    /// `||y - Φ_Ω x_LS||^2` at the returned support.
    pub objective: f64,
    pub candidates: u128,
}

/// LS residual energy of a candidate support.
pub fn support_objective(y: &[Complex64], phi: &SensingMatrix, support: &[usize]) -> f64 {
    let (sub, _) = phi.submatrix(support, true);
    let fit = ls_refit(&sub, y);
    let fitted = sub.mul_vec(&fit.x);
    let r: Vec<Complex64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    norm_sqr(&r)
}

/// Minimizes the LS residual over every size-`k` support. Candidates are
/// visited in lexicographic order and only a strictly smaller objective
/// replaces the incumbent, so ties resolve to the lexicographically first.
pub fn oracle_exhaustive(y: &[Complex64], phi: &SensingMatrix, k: usize) -> Result<OracleResult> {
    let n = phi.devices();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= N, got k={k} N={n}")));
    }
    let count = binomial(n, k);
    if count > ORACLE_LIMIT {
        return Err(Error::CombinatorialGuard {
            n,
            k,
            count,
            limit: ORACLE_LIMIT,
        });
    }
    let mut comb: Vec<usize> = (0..k).collect();
    let mut best = comb.clone();
    let mut best_obj = f64::INFINITY;
    let mut visited = 0u128;
    loop {
        visited += 1;
        let obj = support_objective(y, phi, &comb);
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&comb);
        }
        // advance to the next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(OracleResult {
                    support: best,
                    objective: best_obj,
                    candidates: visited,
                });
            }
            i -= 1;
            if comb[i] < n - k + i {
                comb[i] += 1;
                for j in i + 1..k {
                    comb[j] = comb[j - 1] + 1;
                }
                break;
            }
        }
    }
}
