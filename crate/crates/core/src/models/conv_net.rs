//! Feed-forward convolutional classifiers: a stack of 3×3 conv+ReLU layers
//! (dilation schedule distinguishes the wide-field and plain variants),
//! global average pooling, one dense unit, sigmoid.

use rayon::prelude::*;

use super::{chunk_ranges, init_glorot_uniform, init_he_uniform, BatchView, ModelSpec};
use crate::engine::conv::Conv2d;
use crate::engine::dense::Dense;
use crate::engine::loss::{bce_logit_grad, bce_single};
use crate::engine::ops::{global_avg_pool, global_avg_pool_backward, relu_backward, relu_forward, sigmoid};
use crate::engine::Gradients;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Which dilation policy built this net (kept for checkpoint round-trips).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvKind {
    Dilated,
    ConvFf,
}

#[derive(Clone, Debug)]
pub struct ConvNet<F> {
    pub kind: ConvKind,
    pub channels: usize,
    pub convs: Vec<Conv2d<F>>,
    pub head: Dense<F>,
}

/// Per-thread scratch: one post-ReLU activation buffer per layer (the
/// backward pass replays them), im2col scratch, and head temporaries.
struct ConvWork<F> {
    acts: Vec<Vec<F>>,
    cols: Vec<F>,
    dact: Vec<F>,
    dact2: Vec<F>,
    gap: Vec<F>,
    dgap: Vec<F>,
}

impl<F: Scalar> ConvWork<F> {
    fn new(channels: usize, depth: usize, hw: usize) -> Self {
        ConvWork {
            acts: (0..depth).map(|_| vec![F::zero(); channels * hw]).collect(),
            cols: vec![F::zero(); channels * 9 * hw],
            dact: vec![F::zero(); channels * hw],
            dact2: vec![F::zero(); channels * hw],
            gap: vec![F::zero(); channels],
            dgap: vec![F::zero(); channels],
        }
    }
}

impl<F: Scalar> ConvNet<F> {
    pub fn new(kind: ConvKind, channels: usize, dilations: Vec<usize>, seed: u64) -> Self {
        let mut convs = Vec::with_capacity(dilations.len());
        let mut idx = 0u64;
        for (i, &d) in dilations.iter().enumerate() {
            let in_ch = if i == 0 { 1 } else { channels };
            let mut conv = Conv2d::new(in_ch, channels, d);
            init_he_uniform(&mut conv.weight, in_ch * 9, seed, idx);
            idx += 2; // bias stays zero but keeps its stream slot
            convs.push(conv);
        }
        let mut head = Dense::new(channels, 1);
        init_glorot_uniform(&mut head.weight, channels, 1, seed, idx);
        ConvNet { kind, channels, convs, head }
    }

    pub fn spec(&self) -> ModelSpec {
        match self.kind {
            ConvKind::Dilated => ModelSpec::Dilated {
                channels: self.channels,
                dilation_schedule: self.convs.iter().map(|c| c.dilation).collect(),
            },
            ConvKind::ConvFf => {
                ModelSpec::ConvFf { channels: self.channels, depth: self.convs.len() }
            }
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.convs.len() {
            names.push(format!("conv{}.weight", i + 1));
            names.push(format!("conv{}.bias", i + 1));
        }
        names.push("head.weight".into());
        names.push("head.bias".into());
        names
    }

    pub fn params(&self) -> Vec<&Tensor<F>> {
        let mut ps = Vec::new();
        for c in &self.convs {
            ps.push(&c.weight);
            ps.push(&c.bias);
        }
        ps.push(&self.head.weight);
        ps.push(&self.head.bias);
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut ps = Vec::new();
        for c in &mut self.convs {
            ps.push(&mut c.weight);
            ps.push(&mut c.bias);
        }
        ps.push(&mut self.head.weight);
        ps.push(&mut self.head.bias);
        ps
    }

    /// Runs the conv+ReLU stack, leaving each layer's output in `work.acts`,
    /// and returns the sigmoid probability.
    fn forward_sample(&self, x: &[F], h: usize, w: usize, work: &mut ConvWork<F>) -> Result<F> {
        let hw = h * w;
        for i in 0..self.convs.len() {
            if i == 0 {
                self.convs[0].forward(x, h, w, &mut work.acts[0], &mut work.cols)?;
            } else {
                let (prev, rest) = work.acts.split_at_mut(i);
                self.convs[i].forward(&prev[i - 1], h, w, &mut rest[0], &mut work.cols)?;
            }
            relu_forward(&mut work.acts[i]);
        }
        global_avg_pool(work.acts.last().unwrap(), self.channels, hw, &mut work.gap);
        let mut z = [F::zero()];
        self.head.forward(&work.gap, &mut z)?;
        Ok(sigmoid(z[0]))
    }

    /// Forward + backward for one sample; returns the un-normalized BCE term.
    /// Gradients are scaled by 1/n and accumulated into `grads`.
    #[allow(clippy::too_many_arguments)]
    fn train_sample(
        &self,
        x: &[F],
        label: u8,
        n: usize,
        h: usize,
        w: usize,
        grads: &mut Gradients<F>,
        work: &mut ConvWork<F>,
    ) -> Result<f64> {
        let hw = h * w;
        let depth = self.convs.len();
        let p = self.forward_sample(x, h, w, work)?;
        let loss = bce_single(p.to_f64_lossy(), label);

        let dlogit = bce_logit_grad(p, label, n);
        let head_slot = 2 * depth;
        {
            let (dw, db) = {
                let (a, b) = grads.tensors.split_at_mut(head_slot + 1);
                (&mut a[head_slot], &mut b[0])
            };
            work.dgap.fill(F::zero());
            self.head.backward(&work.gap, &[dlogit], Some(&mut work.dgap), dw, db);
        }
        work.dact.fill(F::zero());
        global_avg_pool_backward(&work.dgap, self.channels, hw, &mut work.dact);

        for i in (0..depth).rev() {
            relu_backward(&work.acts[i], &mut work.dact);
            let (dw, db) = {
                let (a, b) = grads.tensors.split_at_mut(2 * i + 1);
                (&mut a[2 * i], &mut b[0])
            };
            if i == 0 {
                self.convs[0].backward(x, &work.dact, h, w, None, dw, db, &mut work.cols)?;
            } else {
                work.dact2.fill(F::zero());
                self.convs[i].backward(
                    &work.acts[i - 1],
                    &work.dact,
                    h,
                    w,
                    Some(&mut work.dact2),
                    dw,
                    db,
                    &mut work.cols,
                )?;
                std::mem::swap(&mut work.dact, &mut work.dact2);
            }
        }
        Ok(loss)
    }

    pub(crate) fn forward_batch(&self, view: &BatchView<F>) -> Result<Vec<F>> {
        let depth = self.convs.len();
        let nested: Result<Vec<Vec<F>>> = chunk_ranges(view.n)
            .par_iter()
            .map(|&(s, e)| {
                let mut work = ConvWork::new(self.channels, depth, view.h * view.w);
                (s..e).map(|i| self.forward_sample(view.sample(i), view.h, view.w, &mut work)).collect()
            })
            .collect();
        Ok(nested?.into_iter().flatten().collect())
    }

    pub(crate) fn loss_and_grads(&self, view: &BatchView<F>, labels: &[u8], grads: &mut Gradients<F>) -> Result<f64> {
        let n = view.n;
        let depth = self.convs.len();
        let nested: Result<Vec<(f64, Gradients<F>)>> = chunk_ranges(n)
            .par_iter()
            .map(|&(s, e)| {
                let mut work = ConvWork::new(self.channels, depth, view.h * view.w);
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

    /// Flattened output of the last ReLU layer (channels × h × w), the
    /// activations the pooling head reads.
    pub fn representation(&self, sample: &[F], side: usize) -> Result<Vec<F>> {
        if sample.len() != side * side {
            return Err(Error::shape(format!("{side}×{side} image"), format!("{} elements", sample.len())));
        }
        let mut work = ConvWork::new(self.channels, self.convs.len(), side * side);
        self.forward_sample(sample, side, side, &mut work)?;
        Ok(work.acts.pop().unwrap())
    }
}
