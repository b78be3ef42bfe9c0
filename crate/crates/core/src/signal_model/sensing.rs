use std::ops::Range;

use num_complex::Complex64;

use super::codebook::LdsCodebook;
use crate::linalg::{inner, norm, CMatrix};
use crate::{Error, Result};

/// Block sensing matrix `Φ = [Φ_1 ... Φ_N]`.
///
/// Rows are the stacked measurements, `slots * m` of them, where a slot is one
/// (antenna, measurement) pair ordered antenna-major. Each device block `Φ_i`
/// is block-diagonal over slots with `diag(c_i^(t))` on the diagonal, so its
/// width equals the row count.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    matrix: CMatrix,
    devices: usize,
    m: usize,
    slots: usize,
}

impl SensingMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn devices(&self) -> usize {
        self.devices
    }

    pub fn subcarriers(&self) -> usize {
        self.m
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn block_width(&self) -> usize {
        self.m * self.slots
    }

    pub fn block_columns(&self, device: usize) -> Range<usize> {
        let w = self.block_width();
        device * w..(device + 1) * w
    }

    /// `||Φ_i^H r||^2`
    pub fn block_correlation(&self, device: usize, r: &[Complex64]) -> f64 {
        self.block_columns(device)
            .map(|c| inner(self.matrix.column(c), r).norm_sqr())
            .sum()
    }

    /// Concatenates the blocks of `devices`. With `skip_zero_columns`, columns
    /// that are identically zero (positions where a codeword is zero) are
    /// dropped; the returned index map gives each kept column's offset inside
    /// the concatenated blocks.
    pub fn submatrix(&self, devices: &[usize], skip_zero_columns: bool) -> (CMatrix, Vec<usize>) {
        let mut cols: Vec<&[Complex64]> = Vec::new();
        let mut map = Vec::new();
        let w = self.block_width();
        for (b, &d) in devices.iter().enumerate() {
            for (j, c) in self.block_columns(d).enumerate() {
                let col = self.matrix.column(c);
                if skip_zero_columns && col.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                cols.push(col);
                map.push(b * w + j);
            }
        }
        (CMatrix::from_columns(self.rows(), &cols), map)
    }

    /// `Φ x` for a full-length coefficient vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.mul_vec(x)
    }
}

/// Assembles `Φ` for `measurements` slots per antenna and `antennas`
/// receive antennas. Antennas reuse the codeword of their measurement slot.
pub fn build_sensing_matrix(codebook: &LdsCodebook, measurements: usize, antennas: usize) -> SensingMatrix {
    let m = codebook.m;
    let slots = measurements * antennas;
    let rows = m * slots;
    let w = rows;
    let mut matrix = CMatrix::zeros(rows, codebook.n * w);
    for i in 0..codebook.n {
        for q in 0..slots {
            let t = q % measurements;
            let cw = codebook.codeword(i, t);
            for (&p, &v) in cw.positions.iter().zip(&cw.values) {
                let col = i * w + q * m + p;
                matrix[(q * m + p, col)] = v;
            }
        }
    }
    SensingMatrix {
        matrix,
        devices: codebook.n,
        m,
        slots,
    }
}

/// Largest normalized inner product magnitude between distinct nonzero
/// columns. All-zero columns are skipped.
pub fn mutual_coherence(phi: &CMatrix) -> Result<f64> {
    let usable: Vec<(usize, f64)> = (0..phi.cols())
        .map(|c| (c, norm(phi.column(c))))
        .filter(|&(_, n)| n > 0.0)
        .collect();
    let skipped = phi.cols() - usable.len();
    if skipped > 0 {
        log::warn!("mutual coherence: skipped {skipped} all-zero columns");
    }
    if usable.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "mutual coherence needs at least 2 nonzero columns, found {}",
            usable.len()
        )));
    }
    let mut mu: f64 = 0.0;
    for (a, &(i, ni)) in usable.iter().enumerate() {
        for &(j, nj) in &usable[a + 1..] {
            let v = inner(phi.column(i), phi.column(j)).norm() / (ni * nj);
            mu = mu.max(v);
        }
    }
    Ok(mu.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::signal_model::codebook::generate_codebook;
    use crate::signal_model::geometry::complex_gaussian;

    #[test]
    fn single_slot_block_is_diag_of_codeword() {
        let cb = generate_codebook(5, 3, 2, &mut stream(1, 1)).unwrap();
        let phi = build_sensing_matrix(&cb, 1, 1);
        for i in 0..3 {
            let c = cb.codewords[i].dense(5);
            for (j, col) in phi.block_columns(i).enumerate() {
                for r in 0..5 {
                    let expect = if r == j { c[r] } else { Complex64::new(0.0, 0.0) };
                    assert_eq!(phi.matrix()[(r, col)], expect);
                }
            }
        }
    }

    #[test]
    fn two_by_two_hand_assembly() {
        let cb = generate_codebook(2, 2, 2, &mut stream(2, 1)).unwrap();
        let phi = build_sensing_matrix(&cb, 2, 1);
        assert_eq!((phi.rows(), phi.matrix().cols()), (4, 8));
        let c11 = cb.codewords[0].dense(2)[0];
        assert_eq!(phi.matrix()[(0, 0)], c11);
        assert_eq!(phi.matrix()[(2, 2)], c11);
        assert_eq!(phi.matrix()[(2, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn slot_columns_are_confined_to_their_rows() {
        let cb = generate_codebook(4, 3, 4, &mut stream(3, 1)).unwrap();
        let phi = build_sensing_matrix(&cb, 3, 2);
        let m = 4;
        for i in 0..3 {
            for (j, col) in phi.block_columns(i).enumerate() {
                let slot = j / m;
                for r in 0..phi.rows() {
                    if !(slot * m..(slot + 1) * m).contains(&r) {
                        assert_eq!(phi.matrix()[(r, col)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn coherence_of_identity_and_duplicates() {
        assert_eq!(mutual_coherence(&CMatrix::identity(4)).unwrap(), 0.0);
        let a = [Complex64::new(1.0, 0.5), Complex64::new(-0.3, 2.0)];
        let dup = CMatrix::from_columns(2, &[&a, &a]);
        assert!((mutual_coherence(&dup).unwrap() - 1.0).abs() < 1e-15);
        assert!(mutual_coherence(&CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn coherence_matches_brute_force_scan() {
        let mut rng = stream(4, 9);
        let a = CMatrix::from_fn(20, 40, |_, _| complex_gaussian(&mut rng));
        let mut brute: f64 = 0.0;
        for i in 0..40 {
            for j in 0..40 {
                if i == j {
                    continue;
                }
                let mut dot = Complex64::new(0.0, 0.0);
                let (mut ni, mut nj) = (0.0, 0.0);
                for r in 0..20 {
                    dot += a[(r, i)].conj() * a[(r, j)];
                    ni += a[(r, i)].norm_sqr();
                    nj += a[(r, j)].norm_sqr();
                }
                brute = brute.max(dot.norm() / (ni.sqrt() * nj.sqrt()));
            }
        }
        let mu = mutual_coherence(&a).unwrap();
        assert!((mu - brute).abs() < 1e-14, "{mu} vs {brute}");
    }
}
