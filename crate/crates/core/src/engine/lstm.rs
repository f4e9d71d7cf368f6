//! Convolutional LSTM cell.
//!
//! One cell holds a single 3×3 convolution from the concatenated
//! `[input, hidden]` stack to all four gate pre-activations (channel blocks
//! ordered `[i, f, g, o]`), plus a bias per gate channel:
//!
//! ```text
//! z = W ⊛ [x; h] + b                      (4C planes)
//! i = σ(z_i)   f = σ(z_f)   g = tanh(z_g)   o = σ(z_o)
//! c' = f ⊙ c + i ⊙ g
//! h' = o ⊙ tanh(c')
//! ```
//!
//! The backward pass consumes a per-step cache of the post-activation gates,
//! previous cell state, and tanh(c'), and re-lowers the concatenated input
//! for the weight-gradient GEMM.

use crate::engine::conv::Conv2d;
use crate::engine::ops::sigmoid;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gate blocks in channel order.
pub const GATE_I: usize = 0;
pub const GATE_F: usize = 1;
pub const GATE_G: usize = 2;
pub const GATE_O: usize = 3;
pub const GATES: usize = 4;

#[derive(Clone, Debug)]
pub struct ConvLstmCell<F> {
    /// Combined gate convolution: `[4·channels, in_ch + channels, 3, 3]`.
    pub conv: Conv2d<F>,
    pub in_ch: usize,
    pub channels: usize,
}

/// Everything the backward pass needs from one forward step.
#[derive(Clone, Debug)]
pub struct LstmStepCache<F> {
    /// `[x; h_prev]`, (in_ch + C) × HW.
    pub cat_in: Vec<F>,
    /// Post-activation gates, 4C × HW in `[i, f, g, o]` block order.
    pub gates: Vec<F>,
    /// C × HW.
    pub c_prev: Vec<F>,
    /// tanh of the new cell state, C × HW.
    pub tanh_c: Vec<F>,
}

impl<F: Scalar> LstmStepCache<F> {
    pub fn new(in_ch: usize, channels: usize, hw: usize) -> Self {
        LstmStepCache {
            cat_in: vec![F::zero(); (in_ch + channels) * hw],
            gates: vec![F::zero(); GATES * channels * hw],
            c_prev: vec![F::zero(); channels * hw],
            tanh_c: vec![F::zero(); channels * hw],
        }
    }
}

/// Reusable scratch sized for the largest cell in a stack.
#[derive(Clone, Debug)]
pub struct LstmWork<F> {
    pub cols: Vec<F>,
    pub z: Vec<F>,
    pub dz: Vec<F>,
    pub dcat: Vec<F>,
    pub dct: Vec<F>,
    pub cat: Vec<F>,
}

impl<F: Scalar> LstmWork<F> {
    pub fn new(max_in_ch: usize, channels: usize, hw: usize) -> Self {
        let cat_ch = max_in_ch + channels;
        LstmWork {
            cols: vec![F::zero(); cat_ch * 9 * hw],
            z: vec![F::zero(); GATES * channels * hw],
            dz: vec![F::zero(); GATES * channels * hw],
            dcat: vec![F::zero(); cat_ch * hw],
            dct: vec![F::zero(); channels * hw],
            cat: vec![F::zero(); cat_ch * hw],
        }
    }
}

impl<F: Scalar> ConvLstmCell<F> {
    pub fn new(in_ch: usize, channels: usize) -> Self {
        ConvLstmCell { conv: Conv2d::new(in_ch + channels, GATES * channels, 1), in_ch, channels }
    }

    /// One recurrent step without caching (inference).
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        x: &[F],
        h_prev: &[F],
        c_prev: &[F],
        h_new: &mut [F],
        c_new: &mut [F],
        height: usize,
        width: usize,
        work: &mut LstmWork<F>,
    ) -> Result<()> {
        let hw = height * width;
        let cat_len = (self.in_ch + self.channels) * hw;
        let cat = &mut work.cat[..cat_len];
        cat[..self.in_ch * hw].copy_from_slice(x);
        cat[self.in_ch * hw..].copy_from_slice(h_prev);
        let z = &mut work.z[..GATES * self.channels * hw];
        self.conv.forward(cat, height, width, z, &mut work.cols)?;
        self.apply_gates(z, c_prev, h_new, c_new, hw, None);
        Ok(())
    }

    /// One recurrent step, filling `cache` for the backward pass.
    #[allow(clippy::too_many_arguments)]
    pub fn step_cached(
        &self,
        x: &[F],
        h_prev: &[F],
        c_prev: &[F],
        h_new: &mut [F],
        c_new: &mut [F],
        height: usize,
        width: usize,
        work: &mut LstmWork<F>,
        cache: &mut LstmStepCache<F>,
    ) -> Result<()> {
        let hw = height * width;
        cache.cat_in[..self.in_ch * hw].copy_from_slice(x);
        cache.cat_in[self.in_ch * hw..].copy_from_slice(h_prev);
        cache.c_prev.copy_from_slice(c_prev);
        let z = &mut work.z[..GATES * self.channels * hw];
        self.conv.forward(&cache.cat_in, height, width, z, &mut work.cols)?;
        self.apply_gates(z, c_prev, h_new, c_new, hw, Some(cache));
        Ok(())
    }

    /// Gate nonlinearities and state update. With a cache, stores the
    /// post-activation gates and tanh(c').
    fn apply_gates(
        &self,
        z: &[F],
        c_prev: &[F],
        h_new: &mut [F],
        c_new: &mut [F],
        hw: usize,
        cache: Option<&mut LstmStepCache<F>>,
    ) {
        let chw = self.channels * hw;
        let (zi, zf, zg, zo) = (
            &z[GATE_I * chw..(GATE_I + 1) * chw],
            &z[GATE_F * chw..(GATE_F + 1) * chw],
            &z[GATE_G * chw..(GATE_G + 1) * chw],
            &z[GATE_O * chw..(GATE_O + 1) * chw],
        );
        match cache {
            Some(cache) => {
                let (gi, rest) = cache.gates.split_at_mut(chw);
                let (gf, rest) = rest.split_at_mut(chw);
                let (gg, go) = rest.split_at_mut(chw);
                for k in 0..chw {
                    let i = sigmoid(zi[k]);
                    let f = sigmoid(zf[k]);
                    let g = zg[k].tanh();
                    let o = sigmoid(zo[k]);
                    let c = f * c_prev[k] + i * g;
                    let tc = c.tanh();
                    gi[k] = i;
                    gf[k] = f;
                    gg[k] = g;
                    go[k] = o;
                    c_new[k] = c;
                    cache.tanh_c[k] = tc;
                    h_new[k] = o * tc;
                }
            }
            None => {
                for k in 0..chw {
                    let i = sigmoid(zi[k]);
                    let f = sigmoid(zf[k]);
                    let g = zg[k].tanh();
                    let o = sigmoid(zo[k]);
                    let c = f * c_prev[k] + i * g;
                    c_new[k] = c;
                    h_new[k] = o * c.tanh();
                }
            }
        }
    }

    /// BPTT for one step. `dh_new`/`dc_new` are the upstream gradients into
    /// h' and c'; `dh_prev`/`dc_prev` are overwritten with the carries for
    /// step t−1; `dx` (when present) is accumulated with the gradient into
    /// this step's input slab.
    #[allow(clippy::too_many_arguments)]
    pub fn backward_step(
        &self,
        cache: &LstmStepCache<F>,
        dh_new: &[F],
        dc_new: &[F],
        dx: Option<&mut [F]>,
        dh_prev: &mut [F],
        dc_prev: &mut [F],
        dw: &mut Tensor<F>,
        db: &mut Tensor<F>,
        height: usize,
        width: usize,
        work: &mut LstmWork<F>,
    ) -> Result<()> {
        let hw = height * width;
        let chw = self.channels * hw;
        let one = F::one();

        let gi = &cache.gates[GATE_I * chw..(GATE_I + 1) * chw];
        let gf = &cache.gates[GATE_F * chw..(GATE_F + 1) * chw];
        let gg = &cache.gates[GATE_G * chw..(GATE_G + 1) * chw];
        let go = &cache.gates[GATE_O * chw..(GATE_O + 1) * chw];

        // Total gradient into the new cell state, via h' = o ⊙ tanh(c').
        let dct = &mut work.dct[..chw];
        for k in 0..chw {
            let tc = cache.tanh_c[k];
            dct[k] = dc_new[k] + dh_new[k] * go[k] * (one - tc * tc);
        }

        // Pre-activation gate gradients, in gate block order.
        let dz = &mut work.dz[..GATES * chw];
        for k in 0..chw {
            let (i, f, g, o) = (gi[k], gf[k], gg[k], go[k]);
            let di = dct[k] * g;
            let df = dct[k] * cache.c_prev[k];
            let dg = dct[k] * i;
            let do_ = dh_new[k] * cache.tanh_c[k];
            dz[GATE_I * chw + k] = di * i * (one - i);
            dz[GATE_F * chw + k] = df * f * (one - f);
            dz[GATE_G * chw + k] = dg * (one - g * g);
            dz[GATE_O * chw + k] = do_ * o * (one - o);
            dc_prev[k] = dct[k] * f;
        }

        // Through the gate convolution back to [x; h_prev].
        let cat_len = (self.in_ch + self.channels) * hw;
        let dcat = &mut work.dcat[..cat_len];
        dcat.fill(F::zero());
        self.conv.backward(&cache.cat_in, dz, height, width, Some(dcat), dw, db, &mut work.cols)?;
        if let Some(dx) = dx {
            for (a, b) in dx.iter_mut().zip(&dcat[..self.in_ch * hw]) {
                *a += *b;
            }
        }
        dh_prev.copy_from_slice(&dcat[self.in_ch * hw..]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_everything_is_a_fixed_point() {
        let cell = ConvLstmCell::<f64>::new(1, 2);
        let hw = 16;
        let (x, h, c) = (vec![0.0; hw], vec![0.0; 2 * hw], vec![0.0; 2 * hw]);
        let mut hn = vec![1.0; 2 * hw];
        let mut cn = vec![1.0; 2 * hw];
        let mut work = LstmWork::new(1, 2, hw);
        cell.step(&x, &h, &c, &mut hn, &mut cn, 4, 4, &mut work).unwrap();
        assert!(hn.iter().all(|&v| v == 0.0), "σ(0)·tanh(0·c) must be exactly 0");
        assert!(cn.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_preserves_cell_state() {
        use rand::Rng;
        let mut cell = ConvLstmCell::<f64>::new(1, 1);
        let mut rng = crate::rng::stream(3, &[1]);
        for v in cell.conv.weight.data_mut() {
            *v = rng.gen_range(-0.3..0.3);
        }
        // Forget-gate bias → 20 ≈ +∞: c' should reduce to c + i⊙g.
        cell.conv.bias.data_mut()[GATE_F] = 20.0;
        let hw = 9;
        let x: Vec<f64> = (0..hw).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..hw).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let c: Vec<f64> = (0..hw).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut hn = vec![0.0; hw];
        let mut cn = vec![0.0; hw];
        let mut work = LstmWork::new(1, 1, hw);
        let mut cache = LstmStepCache::new(1, 1, hw);
        cell.step_cached(&x, &h, &c, &mut hn, &mut cn, 3, 3, &mut work, &mut cache).unwrap();
        let chw = hw;
        for k in 0..hw {
            let i = cache.gates[GATE_I * chw + k];
            let g = cache.gates[GATE_G * chw + k];
            assert!((cn[k] - (c[k] + i * g)).abs() < 1e-6, "pixel {k}");
        }
    }

    #[test]
    fn hidden_state_is_tanh_bounded() {
        use rand::Rng;
        let mut cell = ConvLstmCell::<f64>::new(2, 3);
        let mut rng = crate::rng::stream(8, &[0]);
        for v in cell.conv.weight.data_mut() {
            *v = rng.gen_range(-2.0..2.0);
        }
        let hw = 25;
        let x: Vec<f64> = (0..2 * hw).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut h = vec![0.0; 3 * hw];
        let mut c = vec![0.0; 3 * hw];
        let mut work = LstmWork::new(2, 3, hw);
        for _ in 0..10 {
            let (mut hn, mut cn) = (vec![0.0; 3 * hw], vec![0.0; 3 * hw]);
            cell.step(&x, &h, &c, &mut hn, &mut cn, 5, 5, &mut work).unwrap();
            h = hn;
            c = cn;
            assert!(h.iter().all(|&v| v.abs() < 1.0), "|h| must stay below 1");
        }
    }
}
