//! Three stacked convolutional LSTM cells unrolled for a fixed number of
//! steps. The input image is injected into cell 1 at *every* step, each
//! cell's hidden state feeds the next cell within the same step, and the
//! classifier head (global average pool → dense → sigmoid) reads cell 3's
//! hidden state after the last step. Training backpropagates through the
//! full unroll.

use rayon::prelude::*;

use super::{chunk_ranges, init_glorot_uniform, BatchView, ModelSpec};
use crate::engine::dense::Dense;
use crate::engine::loss::{bce_logit_grad, bce_single};
use crate::engine::lstm::{ConvLstmCell, LstmStepCache, LstmWork, GATE_F};
use crate::engine::ops::{global_avg_pool, global_avg_pool_backward, sigmoid};
use crate::engine::Gradients;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const CELLS: usize = 3;

#[derive(Clone, Debug)]
pub struct LstmNet<F> {
    pub channels: usize,
    pub steps: usize,
    pub cells: Vec<ConvLstmCell<F>>,
    pub head: Dense<F>,
}

/// Recurrent state + scratch for one worker thread. The caches hold every
/// step of every cell so the backward pass can walk the unroll in reverse.
struct LstmNetWork<F> {
    step: LstmWork<F>,
    caches: Vec<Vec<LstmStepCache<F>>>,
    h: Vec<Vec<F>>,
    c: Vec<Vec<F>>,
    hn: Vec<F>,
    cn: Vec<F>,
    gap: Vec<F>,
    dgap: Vec<F>,
    dh: Vec<Vec<F>>,
    dc: Vec<Vec<F>>,
    dhp: Vec<F>,
    dcp: Vec<F>,
}

impl<F: Scalar> LstmNetWork<F> {
    fn new(channels: usize, hw: usize, cached_steps: usize) -> Self {
        let chw = channels * hw;
        let cell_in = |k: usize| if k == 0 { 1 } else { channels };
        LstmNetWork {
            step: LstmWork::new(channels.max(1), channels, hw),
            caches: (0..cached_steps)
                .map(|_| (0..CELLS).map(|k| LstmStepCache::new(cell_in(k), channels, hw)).collect())
                .collect(),
            h: vec![vec![F::zero(); chw]; CELLS],
            c: vec![vec![F::zero(); chw]; CELLS],
            hn: vec![F::zero(); chw],
            cn: vec![F::zero(); chw],
            gap: vec![F::zero(); channels],
            dgap: vec![F::zero(); channels],
            dh: vec![vec![F::zero(); chw]; CELLS],
            dc: vec![vec![F::zero(); chw]; CELLS],
            dhp: vec![F::zero(); chw],
            dcp: vec![F::zero(); chw],
        }
    }

    fn reset_state(&mut self) {
        for k in 0..CELLS {
            self.h[k].fill(F::zero());
            self.c[k].fill(F::zero());
        }
    }
}

impl<F: Scalar> LstmNet<F> {
    pub fn new(channels: usize, steps: usize, seed: u64) -> Self {
        let mut cells = Vec::with_capacity(CELLS);
        for k in 0..CELLS {
            let in_ch = if k == 0 { 1 } else { channels };
            let mut cell = ConvLstmCell::new(in_ch, channels);
            init_glorot_uniform(
                &mut cell.conv.weight,
                (in_ch + channels) * 9,
                channels * 9,
                seed,
                2 * k as u64,
            );
            // Forget-gate bias starts at +1 so early training does not wipe
            // the cell state before credit can flow back through time.
            let fslice =
                &mut cell.conv.bias.data_mut()[GATE_F * channels..(GATE_F + 1) * channels];
            for b in fslice {
                *b = F::one();
            }
            cells.push(cell);
        }
        let mut head = Dense::new(channels, 1);
        init_glorot_uniform(&mut head.weight, channels, 1, seed, 2 * CELLS as u64);
        LstmNet { channels, steps, cells, head }
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec::Lstm3 { channels: self.channels, steps: self.steps }
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for k in 0..CELLS {
            names.push(format!("cell{}.weight", k + 1));
            names.push(format!("cell{}.bias", k + 1));
        }
        names.push("head.weight".into());
        names.push("head.bias".into());
        names
    }

    pub fn params(&self) -> Vec<&Tensor<F>> {
        let mut ps = Vec::new();
        for c in &self.cells {
            ps.push(&c.conv.weight);
            ps.push(&c.conv.bias);
        }
        ps.push(&self.head.weight);
        ps.push(&self.head.bias);
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut ps = Vec::new();
        for c in &mut self.cells {
            ps.push(&mut c.conv.weight);
            ps.push(&mut c.conv.bias);
        }
        ps.push(&mut self.head.weight);
        ps.push(&mut self.head.bias);
        ps
    }

    /// Unrolls `t_steps` without caching, leaving the final states in
    /// `work.h`/`work.c`.
    fn run_forward(&self, x: &[F], h: usize, w: usize, t_steps: usize, work: &mut LstmNetWork<F>) -> Result<()> {
        work.reset_state();
        for _ in 0..t_steps {
            for k in 0..CELLS {
                if k == 0 {
                    self.cells[0].step(x, &work.h[0], &work.c[0], &mut work.hn, &mut work.cn, h, w, &mut work.step)?;
                } else {
                    let (prev, cur) = work.h.split_at_mut(k);
                    self.cells[k].step(&prev[k - 1], &cur[0], &work.c[k], &mut work.hn, &mut work.cn, h, w, &mut work.step)?;
                }
                std::mem::swap(&mut work.h[k], &mut work.hn);
                std::mem::swap(&mut work.c[k], &mut work.cn);
            }
        }
        Ok(())
    }

    /// Head probability from the current cell-3 hidden state.
    fn head_prob(&self, work: &mut LstmNetWork<F>, hw: usize) -> Result<F> {
        global_avg_pool(&work.h[CELLS - 1], self.channels, hw, &mut work.gap);
        let mut z = [F::zero()];
        self.head.forward(&work.gap, &mut z)?;
        Ok(sigmoid(z[0]))
    }

    fn forward_sample(&self, x: &[F], h: usize, w: usize, t_steps: usize, work: &mut LstmNetWork<F>) -> Result<F> {
        self.run_forward(x, h, w, t_steps, work)?;
        self.head_prob(work, h * w)
    }

    /// Forward with caches + full backward through all steps and cells.
    /// Returns the un-normalized BCE term; gradients are 1/n-scaled.
    #[allow(clippy::too_many_arguments)]
    fn train_sample(
        &self,
        x: &[F],
        label: u8,
        n: usize,
        h: usize,
        w: usize,
        grads: &mut Gradients<F>,
        work: &mut LstmNetWork<F>,
    ) -> Result<f64> {
        let hw = h * w;
        work.reset_state();
        for t in 0..self.steps {
            for k in 0..CELLS {
                let cache = &mut work.caches[t][k];
                if k == 0 {
                    self.cells[0].step_cached(x, &work.h[0], &work.c[0], &mut work.hn, &mut work.cn, h, w, &mut work.step, cache)?;
                } else {
                    let (prev, cur) = work.h.split_at_mut(k);
                    self.cells[k].step_cached(&prev[k - 1], &cur[0], &work.c[k], &mut work.hn, &mut work.cn, h, w, &mut work.step, cache)?;
                }
                std::mem::swap(&mut work.h[k], &mut work.hn);
                std::mem::swap(&mut work.c[k], &mut work.cn);
            }
        }
        let p = self.head_prob(work, hw)?;
        let loss = bce_single(p.to_f64_lossy(), label);

        // Head backward; the gradient into cell 3's final hidden map seeds
        // the reverse unroll.
        let dlogit = bce_logit_grad(p, label, n);
        let head_slot = 2 * CELLS;
        {
            let (a, b) = grads.tensors.split_at_mut(head_slot + 1);
            work.dgap.fill(F::zero());
            self.head.backward(&work.gap, &[dlogit], Some(&mut work.dgap), &mut a[head_slot], &mut b[0]);
        }
        for k in 0..CELLS {
            work.dh[k].fill(F::zero());
            work.dc[k].fill(F::zero());
        }
        global_avg_pool_backward(&work.dgap, self.channels, hw, &mut work.dh[CELLS - 1]);

        // Reverse unroll. At each (t, k): `dh[k]`/`dc[k]` hold the complete
        // upstream gradient into h_k(t)/c_k(t) — the carry from step t+1
        // plus, already accumulated, cell k+1's input gradient from this
        // same step. backward_step emits the carries for t−1 (swapped into
        // place) and adds the input gradient into dh[k−1].
        for t in (0..self.steps).rev() {
            for k in (0..CELLS).rev() {
                let (a, b) = grads.tensors.split_at_mut(2 * k + 1);
                let (dw, db) = (&mut a[2 * k], &mut b[0]);
                let cache = &work.caches[t][k];
                if k == 0 {
                    self.cells[0].backward_step(
                        cache, &work.dh[0], &work.dc[0], None, &mut work.dhp, &mut work.dcp, dw, db, h, w,
                        &mut work.step,
                    )?;
                } else {
                    let (lo, hi) = work.dh.split_at_mut(k);
                    self.cells[k].backward_step(
                        cache,
                        &hi[0],
                        &work.dc[k],
                        Some(&mut lo[k - 1]),
                        &mut work.dhp,
                        &mut work.dcp,
                        dw,
                        db,
                        h,
                        w,
                        &mut work.step,
                    )?;
                }
                std::mem::swap(&mut work.dh[k], &mut work.dhp);
                std::mem::swap(&mut work.dc[k], &mut work.dcp);
            }
        }
        Ok(loss)
    }

    pub(crate) fn forward_batch(&self, view: &BatchView<F>) -> Result<Vec<F>> {
        self.readout_at(view, self.steps)
    }

    /// Probabilities after exactly `t_steps` unroll steps (the trained head
    /// applied to cell 3's hidden state at that step).
    pub(crate) fn readout_at(&self, view: &BatchView<F>, t_steps: usize) -> Result<Vec<F>> {
        if t_steps < 1 {
            return Err(Error::InvalidInput("readout needs at least one recurrent step".into()));
        }
        let nested: Result<Vec<Vec<F>>> = chunk_ranges(view.n)
            .par_iter()
            .map(|&(s, e)| {
                let mut work = LstmNetWork::new(self.channels, view.h * view.w, 0);
                (s..e)
                    .map(|i| self.forward_sample(view.sample(i), view.h, view.w, t_steps, &mut work))
                    .collect()
            })
            .collect();
        Ok(nested?.into_iter().flatten().collect())
    }

    pub(crate) fn loss_and_grads(&self, view: &BatchView<F>, labels: &[u8], grads: &mut Gradients<F>) -> Result<f64> {
        let n = view.n;
        let nested: Result<Vec<(f64, Gradients<F>)>> = chunk_ranges(n)
            .par_iter()
            .map(|&(s, e)| {
                let mut work = LstmNetWork::new(self.channels, view.h * view.w, self.steps);
                let mut part = Gradients::zeros_like(&self.params());
                let mut sum = 0.0;
                for i in s..e {
                    sum += self.train_sample(view.sample(i), labels[i], n, view.h, view.w, &mut part, &mut work)?;
                }
                Ok((sum, part))
            })
            .collect();
        let mut total = 0.0;
        for (s, part) in nested? {
            total += s;
            grads.add_from(&part);
        }
        Ok(total / n as f64)
    }

    /// Cell 3's hidden map (channels × side × side, flattened) after
    /// `t_steps` unroll steps.
    pub fn hidden_at(&self, sample: &[F], side: usize, t_steps: usize) -> Result<Vec<F>> {
        if t_steps < 1 {
            return Err(Error::InvalidInput("hidden state needs at least one recurrent step".into()));
        }
        if sample.len() != side * side {
            return Err(Error::shape(format!("{side}×{side} image"), format!("{} elements", sample.len())));
        }
        let mut work = LstmNetWork::new(self.channels, side * side, 0);
        self.run_forward(sample, side, side, t_steps, &mut work)?;
        Ok(work.h.pop().unwrap())
    }
}
