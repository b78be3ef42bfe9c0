use num_complex::Complex64;

use crate::linalg::{solve_hpd, CMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Refit {
    pub x: Vec<Complex64>,
    /// The normal equations were singular and got diagonal loading.
    pub regularized: bool,
}

/// `x = (Φ^H Φ)^-1 Φ^H y` through a Cholesky factorization of the Gram
/// matrix. Identically-zero columns are left out of the solve and get a zero
/// coefficient.
pub fn ls_refit(phi: &CMatrix, y: &[Complex64]) -> Refit {
    let keep: Vec<usize> = (0..phi.cols())
        .filter(|&c| phi.column(c).iter().any(|v| *v != Complex64::new(0.0, 0.0)))
        .collect();
    let mut x = vec![Complex64::new(0.0, 0.0); phi.cols()];
    if keep.is_empty() {
        return Refit { x, regularized: false };
    }
    let cols: Vec<&[Complex64]> = keep.iter().map(|&c| phi.column(c)).collect();
    let sub = CMatrix::from_columns(phi.rows(), &cols);
    let sol = solve_hpd(&sub.gram(), &sub.adjoint_mul_vec(y));
    for (&c, v) in keep.iter().zip(sol.x) {
        x[c] = v;
    }
    Refit {
        x,
        regularized: sol.regularized,
    }
}

/// `x = Φ^H (Φ Φ^H + ratio I)^-1 y` with `ratio = σ_n^2 / σ_x^2`.
pub fn mmse_refit(phi: &CMatrix, y: &[Complex64], ratio: f64) -> Result<Refit> {
    if !(ratio >= 0.0) {
        return Err(Error::InvalidInput(format!("MMSE ratio must be >= 0, got {ratio}")));
    }
    let mut inner = phi.outer_gram();
    for i in 0..inner.rows() {
        inner[(i, i)] += Complex64::new(ratio, 0.0);
    }
    let sol = solve_hpd(&inner, y);
    Ok(Refit {
        x: phi.adjoint_mul_vec(&sol.x),
        regularized: sol.regularized,
    })
}
