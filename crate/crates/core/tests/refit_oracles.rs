//! Refits checked against nalgebra: Householder QR for least squares and a
//! dense inverse for the MMSE form.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use gfna::cs_baselines::{ls_refit, mmse_refit};
use gfna::linalg::CMatrix;

fn complex_entries(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im)), len)
}

fn to_nalgebra(rows: usize, cols: usize, data: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |r, c| data[c * rows + r])
}

fn to_cmatrix(rows: usize, cols: usize, data: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(rows, cols, |r, c| data[c * rows + r])
}

fn qr_least_squares(a: &DMatrix<Complex64>, y: &DVector<Complex64>) -> DVector<Complex64> {
    let qr = a.clone().qr();
    let rhs = qr.q().adjoint() * y;
    qr.r().solve_upper_triangular(&rhs).expect("full column rank")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ls_refit_matches_qr(
        (rows, cols, data, y) in (4usize..12, 1usize..4).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), complex_entries(r * c), complex_entries(r))
        })
    ) {
        let oracle = qr_least_squares(&to_nalgebra(rows, cols, &data), &DVector::from_vec(y.clone()));
        let fit = ls_refit(&to_cmatrix(rows, cols, &data), &y);
        prop_assume!(!fit.regularized);
        for (a, b) in fit.x.iter().zip(oracle.iter()) {
            prop_assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn mmse_refit_matches_dense_inverse(
        (rows, cols, data, y) in (2usize..8, 1usize..10).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), complex_entries(r * c), complex_entries(r))
        }),
        ratio in 1e-3f64..2.0,
    ) {
        let a = to_nalgebra(rows, cols, &data);
        let inner = &a * a.adjoint() + DMatrix::identity(rows, rows) * Complex64::new(ratio, 0.0);
        let oracle = a.adjoint() * inner.try_inverse().expect("loaded matrix is invertible") * DVector::from_vec(y.clone());
        let fit = mmse_refit(&to_cmatrix(rows, cols, &data), &y, ratio).unwrap();
        for (a, b) in fit.x.iter().zip(oracle.iter()) {
            prop_assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()), "{a} vs {b}");
        }
    }
}

#[test]
fn mmse_tends_to_least_squares_as_noise_vanishes() {
    let rows = 6;
    let cols = 3;
    let data: Vec<Complex64> = (0..rows * cols)
        .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
        .collect();
    let y: Vec<Complex64> = (0..rows).map(|i| Complex64::new(i as f64, 1.0)).collect();
    let phi = to_cmatrix(rows, cols, &data);
    let ls = ls_refit(&phi, &y);
    let oracle = qr_least_squares(&to_nalgebra(rows, cols, &data), &DVector::from_vec(y.clone()));
    let mmse = mmse_refit(&phi, &y, 1e-7).unwrap();
    for ((l, m), o) in ls.x.iter().zip(&mmse.x).zip(oracle.iter()) {
        assert_relative_eq!(l.re, o.re, epsilon = 1e-9);
        assert_relative_eq!(l.im, o.im, epsilon = 1e-9);
        assert!((l - m).norm() < 1e-5, "{l} vs {m}");
    }
}
