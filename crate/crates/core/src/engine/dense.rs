//! Fully connected layer: y = W·x + b per sample.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct Dense<F> {
    pub weight: Tensor<F>, // [out, in]
    pub bias: Tensor<F>,   // [out]
    pub in_dim: usize,
    pub out_dim: usize,
}

impl<F: Scalar> Dense<F> {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            weight: Tensor::zeros(&[out_dim, in_dim]),
            bias: Tensor::zeros(&[out_dim]),
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, x: &[F], y: &mut [F]) -> Result<()> {
        if x.len() != self.in_dim || y.len() != self.out_dim {
            return Err(Error::shape(
                format!("{} in / {} out", self.in_dim, self.out_dim),
                format!("{} in / {} out", x.len(), y.len()),
            ));
        }
        let w = self.weight.data();
        for (o, out) in y.iter_mut().enumerate() {
            let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.bias.data()[o];
            for (wv, xv) in row.iter().zip(x) {
                acc += *wv * *xv;
            }
            *out = acc;
        }
        Ok(())
    }

    /// Several rows at once: `x` is `rows × in_dim`, `y` is `rows × out_dim`.
    /// Used by the attention blocks where every token passes the same dense.
    pub fn forward_rows(&self, x: &[F], rows: usize, y: &mut [F]) {
        debug_assert_eq!(x.len(), rows * self.in_dim);
        debug_assert_eq!(y.len(), rows * self.out_dim);
        // y = x · Wᵀ, then add bias per row.
        F::gemm(rows, self.in_dim, self.out_dim, F::one(), x, false, self.weight.data(), true, F::zero(), y);
        for r in 0..rows {
            for (o, b) in self.bias.data().iter().enumerate() {
                y[r * self.out_dim + o] += *b;
            }
        }
    }

    /// Accumulates dW/db and optionally dx for one sample.
    pub fn backward(
        &self,
        x: &[F],
        dy: &[F],
        dx: Option<&mut [F]>,
        dw: &mut Tensor<F>,
        db: &mut Tensor<F>,
    ) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(dy.len(), self.out_dim);
        let dwd = dw.data_mut();
        for (o, &g) in dy.iter().enumerate() {
            db.data_mut()[o] += g;
            let row = &mut dwd[o * self.in_dim..(o + 1) * self.in_dim];
            for (w, xv) in row.iter_mut().zip(x) {
                *w += g * *xv;
            }
        }
        if let Some(dx) = dx {
            let w = self.weight.data();
            for (o, &g) in dy.iter().enumerate() {
                let row = &w[o * self.in_dim..(o + 1) * self.in_dim];
                for (d, wv) in dx.iter_mut().zip(row) {
                    *d += g * *wv;
                }
            }
        }
    }

    /// Row-batched backward: accumulates dW/db over all rows and fills dx.
    pub fn backward_rows(
        &self,
        x: &[F],
        rows: usize,
        dy: &[F],
        dx: Option<&mut [F]>,
        dw: &mut Tensor<F>,
        db: &mut Tensor<F>,
    ) {
        debug_assert_eq!(x.len(), rows * self.in_dim);
        debug_assert_eq!(dy.len(), rows * self.out_dim);
        // dW += dYᵀ · X
        F::gemm(self.out_dim, rows, self.in_dim, F::one(), dy, true, x, false, F::one(), dw.data_mut());
        for r in 0..rows {
            for (o, b) in db.data_mut().iter_mut().enumerate() {
                *b += dy[r * self.out_dim + o];
            }
        }
        if let Some(dx) = dx {
            // dX += dY · W
            F::gemm(rows, self.out_dim, self.in_dim, F::one(), dy, false, self.weight.data(), false, F::one(), dx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_computes_affine_map() {
        let mut layer = Dense::<f64>::new(3, 2);
        layer.weight = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 0.0, -1.0, 1.0]).unwrap();
        layer.bias = Tensor::from_vec(&[2], vec![0.5, -0.5]).unwrap();
        let mut y = vec![0.0; 2];
        layer.forward(&[1.0, 1.0, 1.0], &mut y).unwrap();
        assert_eq!(y, vec![6.5, -0.5]);
    }

    #[test]
    fn rows_path_matches_single_path() {
        let mut layer = Dense::<f64>::new(4, 3);
        for (i, v) in layer.weight.data_mut().iter_mut().enumerate() {
            *v = (i as f64) * 0.1 - 0.5;
        }
        for (i, v) in layer.bias.data_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.25).collect();
        let mut batched = vec![0.0; 6];
        layer.forward_rows(&x, 2, &mut batched);
        for r in 0..2 {
            let mut single = vec![0.0; 3];
            layer.forward(&x[r * 4..(r + 1) * 4], &mut single).unwrap();
            for (a, b) in single.iter().zip(&batched[r * 3..(r + 1) * 3]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
