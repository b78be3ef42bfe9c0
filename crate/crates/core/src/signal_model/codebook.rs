use std::collections::HashSet;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// One sparse spreading sequence: `S` nonzero values at sorted subcarrier
/// positions, unit Euclidean norm overall.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub positions: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl Codeword {
    pub fn dense(&self, m: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        for (&p, &x) in self.positions.iter().zip(&self.values) {
            v[p] = x;
        }
        v
    }

    fn fingerprint(&self) -> Vec<u64> {
        self.positions
            .iter()
            .map(|&p| p as u64)
            .chain(self.values.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]))
            .collect()
    }
}

/// Low-density signature codebook for `n` devices over `m` subcarriers.
///
/// `codewords` is used in every slot unless per-slot hopping sequences were
/// generated, in which case slot `t > 0` reads `hops[t - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdsCodebook {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub codewords: Vec<Codeword>,
    pub hops: Vec<Vec<Codeword>>,
}

impl LdsCodebook {
    pub fn codeword(&self, device: usize, slot: usize) -> &Codeword {
        if slot == 0 || self.hops.is_empty() {
            &self.codewords[device]
        } else {
            &self.hops[(slot - 1) % self.hops.len()][device]
        }
    }

    pub fn hopping(&self) -> bool {
        !self.hops.is_empty()
    }

    /// The `m x N` codebook matrix `C` of slot `slot`, column-major.
    pub fn matrix(&self, slot: usize) -> crate::linalg::CMatrix {
        let cols: Vec<Vec<Complex64>> = (0..self.n)
            .map(|i| self.codeword(i, slot).dense(self.m))
            .collect();
        let refs: Vec<&[Complex64]> = cols.iter().map(|c| c.as_slice()).collect();
        crate::linalg::CMatrix::from_columns(self.m, &refs)
    }
}

fn draw_codewords<R: Rng + ?Sized>(m: usize, n: usize, s: usize, rng: &mut R) -> Vec<Codeword> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut positions = sample(rng, m, s).into_vec();
        positions.sort_unstable();
        let mut values: Vec<Complex64> = (0..s)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for v in &mut values {
            *v /= norm;
        }
        let cw = Codeword { positions, values };
        if seen.insert(cw.fingerprint()) {
            out.push(cw);
        }
    }
    out
}

/// Draws `n` distinct codewords with `s` nonzeros each: positions uniform
/// without replacement, values i.i.d. circular complex Gaussian, then each
/// codeword scaled to unit norm.
pub fn generate_codebook<R: Rng + ?Sized>(m: usize, n: usize, s: usize, rng: &mut R) -> Result<LdsCodebook> {
    generate_hopping_codebook(m, n, s, 1, rng)
}

/// As [`generate_codebook`], with an independent codebook for each of
/// `slots` measurement slots.
pub fn generate_hopping_codebook<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    s: usize,
    slots: usize,
    rng: &mut R,
) -> Result<LdsCodebook> {
    if s > m {
        return Err(Error::InvalidConfig(format!(
            "codeword nonzeros S={s} exceed subcarriers m={m}"
        )));
    }
    if n == 0 || s == 0 {
        return Err(Error::InvalidConfig(format!(
            "need N >= 1 and S >= 1, got N={n}, S={s}"
        )));
    }
    let codewords = draw_codewords(m, n, s, rng);
    let hops = (1..slots.max(1)).map(|_| draw_codewords(m, n, s, rng)).collect();
    Ok(LdsCodebook {
        m,
        n,
        s,
        codewords,
        hops,
    })
}

/// Codebook whose devices occupy disjoint subcarrier sets, so every pair of
/// sensing blocks is orthogonal. Needs `n * s <= m`.
pub fn generate_disjoint_codebook<R: Rng + ?Sized>(m: usize, n: usize, s: usize, rng: &mut R) -> Result<LdsCodebook> {
    if n * s > m || s == 0 {
        return Err(Error::InvalidConfig(format!(
            "disjoint codebook needs N*S <= m, got N={n} S={s} m={m}"
        )));
    }
    let mut order = sample(rng, m, m).into_vec();
    let codewords = (0..n)
        .map(|_| {
            let mut positions: Vec<usize> = order.drain(..s).collect();
            positions.sort_unstable();
            let mut values: Vec<Complex64> = (0..s)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re, im)
                })
                .collect();
            let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for v in &mut values {
                *v /= norm;
            }
            Codeword { positions, values }
        })
        .collect();
    Ok(LdsCodebook {
        m,
        n,
        s,
        codewords,
        hops: Vec::new(),
    })
}
