//! Small dense complex linear algebra: column-major matrices, Hermitian Gram
//! products and a Cholesky solver with diagonal-loading fallback.

use num_complex::Complex64;

/// Relative diagonal loading applied when a Hermitian system is not
/// numerically positive definite.
pub const DIAGONAL_LOADING: f64 = 1e-12;

/// Dense complex matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from its columns; all columns must share a length.
    pub fn from_columns(rows: usize, columns: &[&[Complex64]]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self {
            rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [Complex64] {
        let rows = self.rows;
        &mut self.data[c * rows..(c + 1) * rows]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (yr, &a) in y.iter_mut().zip(self.column(c)) {
                *yr += a * xc;
            }
        }
        y
    }

    /// `A^H y`
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols).map(|c| inner(self.column(c), y)).collect()
    }

    /// `A^H A`
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut g = CMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = inner(self.column(i), self.column(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// `A A^H`
    pub fn outer_gram(&self) -> CMatrix {
        let n = self.rows;
        let mut g = CMatrix::zeros(n, n);
        for c in 0..self.cols {
            let col = self.column(c);
            for j in 0..n {
                let cj = col[j].conj();
                if cj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    g.data[j * n + i] += col[i] * cj;
                }
            }
        }
        g
    }

    pub fn trace_re(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).sum()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[c * self.rows + r]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[c * self.rows + r]
    }
}

/// Conjugate-linear in the first argument: `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Outcome of a Hermitian positive-definite solve.
#[derive(Debug, Clone)]
pub struct HpdSolution {
    pub x: Vec<Complex64>,
    /// Set when the system had to be diagonally loaded to factor.
    pub regularized: bool,
}

/// Lower Cholesky factor of a Hermitian matrix, or `None` when a pivot is not
/// safely positive.
fn cholesky(a: &CMatrix, loading: f64) -> Option<CMatrix> {
    let n = a.rows();
    let scale = (a.trace_re() / n.max(1) as f64).abs().max(f64::MIN_POSITIVE);
    let tiny = scale * (n as f64) * f64::EPSILON * 16.0;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re + loading;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > tiny) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

fn cholesky_apply(l: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = l.rows();
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)].conj() * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Solves `A x = b` for Hermitian positive semi-definite `A`.
///
/// A singular or indefinite `A` is loaded with `1e-12 * trace(A) / n` on the
/// diagonal (escalated tenfold until the factorization succeeds) and the
/// result is flagged as regularized.
pub fn solve_hpd(a: &CMatrix, b: &[Complex64]) -> HpdSolution {
    assert_eq!(a.rows(), a.cols());
    assert_eq!(a.rows(), b.len());
    let n = a.rows();
    if n == 0 {
        return HpdSolution {
            x: Vec::new(),
            regularized: false,
        };
    }
    if !(a.trace_re() > 0.0) {
        // zero (or non-finite) matrix: the minimum-norm answer is zero
        return HpdSolution {
            x: vec![Complex64::new(0.0, 0.0); n],
            regularized: true,
        };
    }
    if let Some(l) = cholesky(a, 0.0) {
        return HpdSolution {
            x: cholesky_apply(&l, b),
            regularized: false,
        };
    }
    let base = (a.trace_re() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut loading = DIAGONAL_LOADING * base;
    loop {
        if let Some(l) = cholesky(a, loading) {
            return HpdSolution {
                x: cholesky_apply(&l, b),
                regularized: true,
            };
        }
        loading *= 10.0;
        if !loading.is_finite() {
            // A is all zeros or non-finite; the zero vector is the only
            // sensible minimum-norm answer.
            return HpdSolution {
                x: vec![Complex64::new(0.0, 0.0); n],
                regularized: true,
            };
        }
    }
}
