use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

/// Floating-point type the network can run in. Training defaults to `f32`;
/// gradient checks use `f64`.
pub trait Scalar: Float + Default + Debug + Sum + Send + Sync + 'static {
    fn of(v: f64) -> Self;

    /// `c = a * b + beta * c` for an `m x k` by `k x n` product with
    /// arbitrary strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        a_strides: (usize, usize),
        b: &[Self],
        b_strides: (usize, usize),
        beta: Self,
        c: &mut [Self],
    );
}

fn check_extent(len: usize, rows: usize, cols: usize, (rs, cs): (usize, usize)) {
    if rows > 0 && cols > 0 {
        let last = (rows - 1) * rs + (cols - 1) * cs;
        assert!(last < len, "matrix buffer too small");
    }
}

macro_rules! impl_scalar {
    ($t:ty, $kernel:path) => {
        impl Scalar for $t {
            fn of(v: f64) -> Self {
                v as $t
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                a_strides: (usize, usize),
                b: &[Self],
                b_strides: (usize, usize),
                beta: Self,
                c: &mut [Self],
            ) {
                check_extent(a.len(), m, k, a_strides);
                check_extent(b.len(), k, n, b_strides);
                assert_eq!(c.len(), m * n, "output buffer has the wrong length");
                // SAFETY: every index the kernel touches lies inside the
                // extents checked above.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        a_strides.0 as isize,
                        a_strides.1 as isize,
                        b.as_ptr(),
                        b_strides.0 as isize,
                        b_strides.1 as isize,
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

/// `c (rows x out) = x (rows x inp) * w^T` with `w` stored `out x inp`.
pub(crate) fn mul_transposed<F: Scalar>(x: &[F], w: &[F], rows: usize, inp: usize, out: usize, c: &mut [F]) {
    F::gemm(rows, inp, out, x, (inp, 1), w, (1, inp), F::zero(), c);
}

/// `c (rows x inp) = d (rows x out) * w` with `w` stored `out x inp`.
pub(crate) fn mul_plain<F: Scalar>(d: &[F], w: &[F], rows: usize, out: usize, inp: usize, beta: F, c: &mut [F]) {
    F::gemm(rows, out, inp, d, (out, 1), w, (inp, 1), beta, c);
}

/// `c (out x inp) = d^T * x` for `d` of shape `rows x out`, `x` of shape `rows x inp`.
pub(crate) fn mul_left_transposed<F: Scalar>(d: &[F], x: &[F], rows: usize, out: usize, inp: usize, c: &mut [F]) {
    F::gemm(out, rows, inp, d, (1, out), x, (inp, 1), F::zero(), c);
}
