//! Parameter updates: plain SGD and Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Optimizer<F> {
    pub kind: OptimizerKind,
    pub lr: f64,
    steps: u64,
    first: Vec<Tensor<F>>,
    second: Vec<Tensor<F>>,
}

impl<F: Scalar> Optimizer<F> {
    pub fn new(kind: OptimizerKind, lr: f64, param_shapes: &[Vec<usize>]) -> Self {
        let (first, second) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam => (
                param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
                param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            ),
        };
        Optimizer { kind, lr, steps: 0, first, second }
    }

    /// Applies one update. `params` and `grads` must be in the same fixed
    /// order as the shapes passed to [`Optimizer::new`].
    pub fn step(&mut self, params: &mut [&mut Tensor<F>], grads: &[Tensor<F>]) {
        assert_eq!(params.len(), grads.len());
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = F::from_real(self.lr);
                for (p, g) in params.iter_mut().zip(grads) {
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv -= lr * *gv;
                    }
                }
            }
            OptimizerKind::Adam => {
                self.steps += 1;
                let t = self.steps as i32;
                // Fold both bias corrections into the step size.
                let alpha = self.lr * (1.0 - BETA2.powi(t)).sqrt() / (1.0 - BETA1.powi(t));
                let (alpha, b1, b2, one_m_b1, one_m_b2, eps) = (
                    F::from_real(alpha),
                    F::from_real(BETA1),
                    F::from_real(BETA2),
                    F::from_real(1.0 - BETA1),
                    F::from_real(1.0 - BETA2),
                    F::from_real(EPS),
                );
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.first.iter_mut().zip(self.second.iter_mut()))
                {
                    let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
                    for i in 0..pd.len() {
                        let gv = g.data()[i];
                        md[i] = b1 * md[i] + one_m_b1 * gv;
                        vd[i] = b2 * vd[i] + one_m_b2 * gv * gv;
                        pd[i] -= alpha * md[i] / (vd[i].sqrt() + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_param(v: f64) -> Vec<Tensor<f64>> {
        vec![Tensor::from_vec(&[1], vec![v]).unwrap()]
    }

    #[test]
    fn zero_gradient_leaves_parameters_alone() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut opt = Optimizer::new(kind, 0.1, &[vec![1]]);
            let mut p = single_param(1.5);
            let g = single_param(0.0);
            for _ in 0..3 {
                let mut refs: Vec<&mut Tensor<f64>> = p.iter_mut().collect();
                opt.step(&mut refs, &g);
            }
            assert!((p[0].data()[0] - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sgd_arithmetic() {
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1, &[vec![1]]);
        let mut p = single_param(1.0);
        let g = single_param(0.5);
        let mut refs: Vec<&mut Tensor<f64>> = p.iter_mut().collect();
        opt.step(&mut refs, &g);
        assert!((p[0].data()[0] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn adam_minimizes_a_parabola() {
        // f(p) = p², ∇f = 2p, from p=1 with lr 1e-2.
        let mut opt = Optimizer::new(OptimizerKind::Adam, 1e-2, &[vec![1]]);
        let mut p = single_param(1.0);
        for _ in 0..500 {
            let g = single_param(2.0 * p[0].data()[0]);
            let mut refs: Vec<&mut Tensor<f64>> = p.iter_mut().collect();
            opt.step(&mut refs, &g);
        }
        assert!(p[0].data()[0].abs() < 1e-2, "got {}", p[0].data()[0]);
    }
}
