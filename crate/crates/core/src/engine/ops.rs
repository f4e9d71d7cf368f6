//! Elementwise activations, pooling, and softmax — forward and backward.

use crate::scalar::Scalar;

#[inline]
pub fn sigmoid<F: Scalar>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

pub fn relu_forward<F: Scalar>(x: &mut [F]) {
    for v in x {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

/// dx = dy ⊙ [y > 0], where `y` is the *post*-activation value (equivalent
/// to masking on the pre-activation sign away from the measure-zero point 0).
pub fn relu_backward<F: Scalar>(y: &[F], dy: &mut [F]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        if v <= F::zero() {
            *d = F::zero();
        }
    }
}

/// Mean over each channel plane: `[ch, h·w] → [ch]`.
pub fn global_avg_pool<F: Scalar>(x: &[F], ch: usize, hw: usize, y: &mut [F]) {
    debug_assert_eq!(x.len(), ch * hw);
    debug_assert_eq!(y.len(), ch);
    let inv = F::from_real(1.0 / hw as f64);
    for c in 0..ch {
        let mut acc = F::zero();
        for &v in &x[c * hw..(c + 1) * hw] {
            acc += v;
        }
        y[c] = acc * inv;
    }
}

pub fn global_avg_pool_backward<F: Scalar>(dy: &[F], ch: usize, hw: usize, dx: &mut [F]) {
    debug_assert_eq!(dy.len(), ch);
    debug_assert_eq!(dx.len(), ch * hw);
    let inv = F::from_real(1.0 / hw as f64);
    for c in 0..ch {
        let g = dy[c] * inv;
        for v in &mut dx[c * hw..(c + 1) * hw] {
            *v += g;
        }
    }
}

/// Row-wise softmax over an `rows × cols` matrix, in place, with the usual
/// max-subtraction for stability.
pub fn softmax_rows<F: Scalar>(x: &mut [F], rows: usize, cols: usize) {
    debug_assert_eq!(x.len(), rows * cols);
    for r in 0..rows {
        let row = &mut x[r * cols..(r + 1) * cols];
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv = F::one() / sum;
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
}

/// Backward of row-wise softmax: given post-softmax `a` and upstream `da`,
/// writes ds = a ⊙ (da − ⟨da, a⟩) per row into `da`.
pub fn softmax_rows_backward<F: Scalar>(a: &[F], da: &mut [F], rows: usize, cols: usize) {
    for r in 0..rows {
        let a_row = &a[r * cols..(r + 1) * cols];
        let d_row = &mut da[r * cols..(r + 1) * cols];
        let mut dot = F::zero();
        for (&av, &dv) in a_row.iter().zip(d_row.iter()) {
            dot += av * dv;
        }
        for (dv, &av) in d_row.iter_mut().zip(a_row) {
            *dv = av * (*dv - dot);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_masks_negative_lanes() {
        let mut x = vec![-1.0f64, 0.0, 2.5];
        relu_forward(&mut x);
        assert_eq!(x, vec![0.0, 0.0, 2.5]);
        let mut dy = vec![1.0, 1.0, 1.0];
        relu_backward(&x, &mut dy);
        assert_eq!(dy, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn gap_and_its_backward_are_adjoint() {
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let mut y = vec![0.0; 2];
        global_avg_pool(&x, 2, 6, &mut y);
        assert!((y[0] - 2.5).abs() < 1e-12);
        assert!((y[1] - 8.5).abs() < 1e-12);
        // ⟨gap(x), u⟩ == ⟨x, gap_backward(u)⟩
        let u = vec![0.7, -0.3];
        let lhs: f64 = y.iter().zip(&u).map(|(a, b)| a * b).sum();
        let mut dx = vec![0.0; 12];
        global_avg_pool_backward(&u, 2, 6, &mut dx);
        let rhs: f64 = x.iter().zip(&dx).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_normalize() {
        let mut x = vec![1.0f64, 2.0, 3.0, -1.0, 0.0, 1.0];
        softmax_rows(&mut x, 2, 3);
        for r in 0..2 {
            let s: f64 = x[r * 3..(r + 1) * 3].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(x[0] < x[1] && x[1] < x[2]);
    }

    #[test]
    fn sigmoid_is_bounded_and_monotone() {
        assert!((sigmoid(0.0f64) - 0.5).abs() < 1e-15);
        assert!(sigmoid(20.0f64) < 1.0);
        assert!(sigmoid(-20.0f64) > 0.0);
        assert!(sigmoid(1.0f64) > sigmoid(0.5f64));
    }
}
