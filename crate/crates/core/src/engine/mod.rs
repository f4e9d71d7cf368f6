//! The neural engine: layers with hand-derived gradients, losses,
//! optimizers, finite-difference verification, and checkpoint I/O.

pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod ops;
pub mod optim;

pub use conv::{conv2d_naive, Conv2d};
pub use dense::Dense;
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{ConvLstmCell, LstmStepCache, LstmWork};
pub use optim::{Optimizer, OptimizerKind};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gradient buffers matching a model's parameter list, in the same fixed
/// order. Kept separate from the parameters so several batch slices can
/// accumulate into private copies that are then merged deterministically.
#[derive(Clone, Debug)]
pub struct Gradients<F> {
    pub tensors: Vec<Tensor<F>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn zeros_like(params: &[&Tensor<F>]) -> Self {
        Gradients { tensors: params.iter().map(|p| Tensor::zeros(p.shape())).collect() }
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.fill(F::zero());
        }
    }

    /// Elementwise merge; order of calls defines the summation order.
    pub fn add_from(&mut self, other: &Gradients<F>) {
        debug_assert_eq!(self.tensors.len(), other.tensors.len());
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.all_finite())
    }
}

/// Anything with parameters and a scalar training loss: the surface the
/// finite-difference checker and the optimizer work against.
pub trait Differentiable<F: Scalar> {
    /// Stable names, aligned with `params()` order, for reports.
    fn param_names(&self) -> Vec<String>;
    fn params(&self) -> Vec<&Tensor<F>>;
    fn params_mut(&mut self) -> Vec<&mut Tensor<F>>;
    /// Mean BCE over the batch (no gradients).
    fn loss(&self, batch: &Tensor<F>, labels: &[u8]) -> Result<f64>;
    /// Mean BCE plus parameter gradients accumulated into `grads`.
    fn loss_and_grads(&self, batch: &Tensor<F>, labels: &[u8], grads: &mut Gradients<F>) -> Result<f64>;
}
