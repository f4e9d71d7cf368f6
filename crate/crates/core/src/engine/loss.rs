//! Binary cross-entropy over sigmoid outputs.
//!
//! The gradient is injected at the logit: d(mean BCE)/d(logit_i) is exactly
//! (p_i − y_i)/N, which is both cheaper and better conditioned than chaining
//! through the sigmoid. Probabilities are clamped to [1e−7, 1−1e−7] before
//! the log so a saturated output reports a large finite loss instead of inf;
//! the clamp does not alter gradients (they never pass through the log).

use crate::scalar::Scalar;

pub const PROB_CLAMP: f64 = 1e-7;

/// Mean BCE, accumulated in f64 regardless of the model scalar.
pub fn bce_mean<F: Scalar>(probs: &[F], labels: &[u8]) -> f64 {
    debug_assert_eq!(probs.len(), labels.len());
    let mut acc = 0.0f64;
    for (&p, &y) in probs.iter().zip(labels) {
        acc += bce_single(p.to_f64_lossy(), y);
    }
    acc / probs.len() as f64
}

/// One sample's clamped BCE.
pub fn bce_single(p: f64, label: u8) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// d(mean BCE)/d(logit) for one sample in a batch of `n`.
#[inline]
pub fn bce_logit_grad<F: Scalar>(p: F, label: u8, n: usize) -> F {
    let y = if label == 1 { F::one() } else { F::zero() };
    (p - y) * F::from_real(1.0 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_at_truth_is_tiny() {
        assert!(bce_single(1.0, 1) <= 1e-6);
        assert!(bce_single(0.0, 0) <= 1e-6);
    }

    #[test]
    fn bce_at_half_is_ln2() {
        let probs = vec![0.5f32; 8];
        let labels = vec![1u8, 0, 1, 0, 1, 0, 1, 0];
        assert!((bce_mean(&probs, &labels) - std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn logit_grad_signs() {
        // Confident wrong answers pull hardest.
        let g_wrong: f64 = bce_logit_grad(0.9, 0, 1);
        let g_right: f64 = bce_logit_grad(0.9, 1, 1);
        assert!(g_wrong > 0.0 && g_wrong > g_right.abs());
        assert!((bce_logit_grad(0.3f64, 1, 10) - (0.3 - 1.0) / 10.0).abs() < 1e-12);
    }
}
