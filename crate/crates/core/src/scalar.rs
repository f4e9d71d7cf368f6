//! Scalar abstraction for the engine.
//!
//! All numeric code is generic over [`Scalar`] so the same layer
//! implementations run in f32 for training and in f64 when a
//! finite-difference oracle needs the extra precision. Only f32 and f64
//! implement the trait; each wires `gemm` to the matching matrixmultiply
//! kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

pub trait Scalar:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// `C = alpha * op_a(A) * op_b(B) + beta * C` for row-major slices.
    ///
    /// `A` is `m x k` after `trans_a`, `B` is `k x n` after `trans_b`, and
    /// `C` is always `m x n` row-major. A transposed operand is stored
    /// row-major in its *untransposed* shape (so `trans_a` means the slice
    /// holds a `k x m` matrix).
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        trans_a: bool,
        b: &[Self],
        trans_b: bool,
        beta: Self,
        c: &mut [Self],
    );

    #[inline]
    fn from_real(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

/// Row/column strides for one operand given its transpose flag.
#[inline]
fn strides(rows_untransposed: usize, cols_untransposed: usize, trans: bool) -> (isize, isize) {
    // Row-major storage: element (r, c) lives at r * cols + c. Transposing
    // swaps the roles of the strides instead of moving data.
    let _ = rows_untransposed;
    if trans {
        (1, cols_untransposed as isize)
    } else {
        (cols_untransposed as isize, 1)
    }
}

macro_rules! impl_scalar {
    ($ty:ty, $gemm:path) => {
        impl Scalar for $ty {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                trans_a: bool,
                b: &[Self],
                trans_b: bool,
                beta: Self,
                c: &mut [Self],
            ) {
                assert_eq!(a.len(), m * k, "gemm: A must hold m*k elements");
                assert_eq!(b.len(), k * n, "gemm: B must hold k*n elements");
                assert_eq!(c.len(), m * n, "gemm: C must hold m*n elements");
                // Untransposed shapes as stored: A is (m x k) or (k x m), etc.
                let (rsa, csa) = if trans_a { strides(k, m, true) } else { strides(m, k, false) };
                let (rsb, csb) = if trans_b { strides(n, k, true) } else { strides(k, n, false) };
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
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
