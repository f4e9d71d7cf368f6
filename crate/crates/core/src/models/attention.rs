//! Patch self-attention baseline, built from the same dense/GEMM primitives
//! as everything else: non-overlapping patches → linear embedding + learned
//! position codes → a stack of single-head attention blocks with two-layer
//! ReLU MLPs and residual connections (no normalization layers) → mean pool
//! over tokens → dense → sigmoid.

use rayon::prelude::*;

use super::{chunk_ranges, init_glorot_uniform, init_uniform, BatchView, ModelSpec};
use crate::engine::dense::Dense;
use crate::engine::loss::{bce_logit_grad, bce_single};
use crate::engine::ops::{relu_backward, relu_forward, sigmoid, softmax_rows, softmax_rows_backward};
use crate::engine::Gradients;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// The attention variant embeds a fixed token grid, so it operates on the
/// base image side (patch must divide it; position codes are sized for it).
pub(crate) const BASE_SIDE: usize = 20;

#[derive(Clone, Debug)]
pub struct AttnBlock<F> {
    pub wq: Dense<F>,
    pub wk: Dense<F>,
    pub wv: Dense<F>,
    pub wo: Dense<F>,
    pub mlp1: Dense<F>,
    pub mlp2: Dense<F>,
}

#[derive(Clone, Debug)]
pub struct AttentionNet<F> {
    pub patch: usize,
    pub dim: usize,
    pub tokens: usize,
    pub embed: Dense<F>,
    /// Learned position codes, `[tokens, dim]`, added to the embeddings.
    pub pos: Tensor<F>,
    pub blocks: Vec<AttnBlock<F>>,
    pub head: Dense<F>,
}

/// Everything one block's backward pass replays.
struct BlockCache<F> {
    q: Vec<F>,
    k: Vec<F>,
    v: Vec<F>,
    a: Vec<F>,
    z: Vec<F>,
    x1: Vec<F>,
    hm: Vec<F>,
}

struct AttnWork<F> {
    patches: Vec<F>,
    /// xs[0] = embedded input, xs[l+1] = output of block l.
    xs: Vec<Vec<F>>,
    blocks: Vec<BlockCache<F>>,
    pool: Vec<F>,
    dpool: Vec<F>,
    dx: Vec<F>,
    dxin: Vec<F>,
    dhm: Vec<F>,
    dz: Vec<F>,
    dq: Vec<F>,
    dk: Vec<F>,
    dv: Vec<F>,
    da: Vec<F>,
}

impl<F: Scalar> AttnWork<F> {
    fn new(tokens: usize, dim: usize, patch: usize, layers: usize) -> Self {
        let td = tokens * dim;
        AttnWork {
            patches: vec![F::zero(); tokens * patch * patch],
            xs: vec![vec![F::zero(); td]; layers + 1],
            blocks: (0..layers)
                .map(|_| BlockCache {
                    q: vec![F::zero(); td],
                    k: vec![F::zero(); td],
                    v: vec![F::zero(); td],
                    a: vec![F::zero(); tokens * tokens],
                    z: vec![F::zero(); td],
                    x1: vec![F::zero(); td],
                    hm: vec![F::zero(); tokens * 2 * dim],
                })
                .collect(),
            pool: vec![F::zero(); dim],
            dpool: vec![F::zero(); dim],
            dx: vec![F::zero(); td],
            dxin: vec![F::zero(); td],
            dhm: vec![F::zero(); tokens * 2 * dim],
            dz: vec![F::zero(); td],
            dq: vec![F::zero(); td],
            dk: vec![F::zero(); td],
            dv: vec![F::zero(); td],
            da: vec![F::zero(); tokens * tokens],
        }
    }
}

impl<F: Scalar> AttentionNet<F> {
    pub fn new(patch: usize, dim: usize, layers: usize, seed: u64) -> Self {
        assert_eq!(BASE_SIDE % patch, 0, "patch must divide the {BASE_SIDE}-pixel grid");
        let side_tokens = BASE_SIDE / patch;
        let tokens = side_tokens * side_tokens;
        let psz = patch * patch;

        let mut embed = Dense::new(psz, dim);
        init_glorot_uniform(&mut embed.weight, psz, dim, seed, 0);
        // Position codes stay small relative to the embeddings so they nudge
        // rather than dominate the patch content at the first layer.
        let mut pos = Tensor::zeros(&[tokens, dim]);
        init_uniform(&mut pos, 1.0 / (dim as f64).sqrt(), seed, 2);

        let mut blocks = Vec::with_capacity(layers);
        let mut idx = 3u64;
        for _ in 0..layers {
            let mk = |in_dim: usize, out_dim: usize, idx: &mut u64| {
                let mut d = Dense::new(in_dim, out_dim);
                init_glorot_uniform(&mut d.weight, in_dim, out_dim, seed, *idx);
                *idx += 2;
                d
            };
            blocks.push(AttnBlock {
                wq: mk(dim, dim, &mut idx),
                wk: mk(dim, dim, &mut idx),
                wv: mk(dim, dim, &mut idx),
                wo: mk(dim, dim, &mut idx),
                mlp1: mk(dim, 2 * dim, &mut idx),
                mlp2: mk(2 * dim, dim, &mut idx),
            });
        }
        let mut head = Dense::new(dim, 1);
        init_glorot_uniform(&mut head.weight, dim, 1, seed, idx);
        AttentionNet { patch, dim, tokens, embed, pos, blocks, head }
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec::Attention { patch: self.patch, dim: self.dim, layers: self.blocks.len() }
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["embed.weight".into(), "embed.bias".into(), "pos".into()];
        for l in 0..self.blocks.len() {
            for part in ["wq", "wk", "wv", "wo", "mlp1", "mlp2"] {
                names.push(format!("block{}.{part}.weight", l + 1));
                names.push(format!("block{}.{part}.bias", l + 1));
            }
        }
        names.push("head.weight".into());
        names.push("head.bias".into());
        names
    }

    pub fn params(&self) -> Vec<&Tensor<F>> {
        let mut ps: Vec<&Tensor<F>> = vec![&self.embed.weight, &self.embed.bias, &self.pos];
        for b in &self.blocks {
            for d in [&b.wq, &b.wk, &b.wv, &b.wo, &b.mlp1, &b.mlp2] {
                ps.push(&d.weight);
                ps.push(&d.bias);
            }
        }
        ps.push(&self.head.weight);
        ps.push(&self.head.bias);
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut ps: Vec<&mut Tensor<F>> = vec![];
        let AttentionNet { embed, pos, blocks, head, .. } = self;
        ps.push(&mut embed.weight);
        ps.push(&mut embed.bias);
        ps.push(pos);
        for b in blocks {
            for d in [&mut b.wq, &mut b.wk, &mut b.wv, &mut b.wo, &mut b.mlp1, &mut b.mlp2] {
                ps.push(&mut d.weight);
                ps.push(&mut d.bias);
            }
        }
        ps.push(&mut head.weight);
        ps.push(&mut head.bias);
        ps
    }

    fn check_side(&self, h: usize, w: usize) -> Result<()> {
        if h != BASE_SIDE || w != BASE_SIDE {
            return Err(Error::InvalidInput(format!(
                "attention model embeds a fixed {BASE_SIDE}×{BASE_SIDE} grid, got {h}×{w}",
            )));
        }
        Ok(())
    }

    /// Row-major patch grid, each patch's pixels row-major.
    fn extract_patches(&self, x: &[F], out: &mut [F]) {
        let p = self.patch;
        let side_tokens = BASE_SIDE / p;
        for ti in 0..side_tokens {
            for tj in 0..side_tokens {
                let tok = ti * side_tokens + tj;
                for pu in 0..p {
                    let src = (ti * p + pu) * BASE_SIDE + tj * p;
                    let dst = tok * p * p + pu * p;
                    out[dst..dst + p].copy_from_slice(&x[src..src + p]);
                }
            }
        }
    }

    /// Full forward, filling caches; returns the sigmoid probability.
    fn forward_sample(&self, x: &[F], h: usize, w: usize, work: &mut AttnWork<F>) -> Result<F> {
        self.check_side(h, w)?;
        let (p, d) = (self.tokens, self.dim);
        let scale = F::from_real(1.0 / (d as f64).sqrt());

        self.extract_patches(x, &mut work.patches);
        self.embed.forward_rows(&work.patches, p, &mut work.xs[0]);
        for (v, q) in work.xs[0].iter_mut().zip(self.pos.data()) {
            *v += *q;
        }

        for (l, block) in self.blocks.iter().enumerate() {
            let (before, after) = work.xs.split_at_mut(l + 1);
            let x_in = &before[l];
            let x_out = &mut after[0];
            let cache = &mut work.blocks[l];

            block.wq.forward_rows(x_in, p, &mut cache.q);
            block.wk.forward_rows(x_in, p, &mut cache.k);
            block.wv.forward_rows(x_in, p, &mut cache.v);
            // a = softmax(Q·Kᵀ/√d) row-wise, z = a·V.
            F::gemm(p, d, p, scale, &cache.q, false, &cache.k, true, F::zero(), &mut cache.a);
            softmax_rows(&mut cache.a, p, p);
            F::gemm(p, p, d, F::one(), &cache.a, false, &cache.v, false, F::zero(), &mut cache.z);
            // x1 = x + Wo·z (reusing x_out as the Wo output buffer).
            block.wo.forward_rows(&cache.z, p, x_out);
            for (o, xv) in cache.x1.iter_mut().zip(x_in.iter().zip(x_out.iter())) {
                *o = *xv.0 + *xv.1;
            }
            // x2 = x1 + mlp2(relu(mlp1(x1))).
            block.mlp1.forward_rows(&cache.x1, p, &mut cache.hm);
            relu_forward(&mut cache.hm);
            block.mlp2.forward_rows(&cache.hm, p, x_out);
            for (o, &xv) in x_out.iter_mut().zip(&cache.x1) {
                *o += xv;
            }
        }

        // Mean over tokens, then the scalar head.
        let x_final = work.xs.last().unwrap();
        let inv = F::from_real(1.0 / p as f64);
        for di in 0..d {
            let mut acc = F::zero();
            for t in 0..p {
                acc += x_final[t * d + di];
            }
            work.pool[di] = acc * inv;
        }
        let mut z = [F::zero()];
        self.head.forward(&work.pool, &mut z)?;
        Ok(sigmoid(z[0]))
    }

    #[allow(clippy::too_many_arguments)]
    fn train_sample(
        &self,
        x: &[F],
        label: u8,
        n: usize,
        h: usize,
        w: usize,
        grads: &mut Gradients<F>,
        work: &mut AttnWork<F>,
    ) -> Result<f64> {
        let prob = self.forward_sample(x, h, w, work)?;
        let loss = bce_single(prob.to_f64_lossy(), label);
        let (p, d) = (self.tokens, self.dim);
        let scale = F::from_real(1.0 / (d as f64).sqrt());
        let layers = self.blocks.len();

        // tensors[i], tensors[i+1] = one dense layer's (dW, db).
        fn pair<F: Scalar>(g: &mut Gradients<F>, i: usize) -> (&mut Tensor<F>, &mut Tensor<F>) {
            let (a, b) = g.tensors.split_at_mut(i + 1);
            (a.last_mut().unwrap(), &mut b[0])
        }

        let dlogit = bce_logit_grad(prob, label, n);
        {
            let (dw, db) = pair(grads, 3 + 12 * layers);
            work.dpool.fill(F::zero());
            self.head.backward(&work.pool, &[dlogit], Some(&mut work.dpool), dw, db);
        }
        // Mean-pool backward: every token gets dpool / tokens.
        let inv = F::from_real(1.0 / p as f64);
        for t in 0..p {
            for di in 0..d {
                work.dx[t * d + di] = work.dpool[di] * inv;
            }
        }

        for l in (0..layers).rev() {
            let block = &self.blocks[l];
            let cache = &work.blocks[l];
            let base = 3 + 12 * l;
            let x_in = &work.xs[l];

            // x2 = x1 + mlp2(relu(mlp1(x1))): dx flows to both branches.
            work.dhm.fill(F::zero());
            {
                let (dw, db) = pair(grads, base + 10);
                block.mlp2.backward_rows(&cache.hm, p, &work.dx, Some(&mut work.dhm), dw, db);
            }
            relu_backward(&cache.hm, &mut work.dhm);
            {
                let (dw, db) = pair(grads, base + 8);
                block.mlp1.backward_rows(&cache.x1, p, &work.dhm, Some(&mut work.dx), dw, db);
            }

            // x1 = x_in + Wo·z: dx again feeds both the residual and Wo.
            work.dz.fill(F::zero());
            {
                let (dw, db) = pair(grads, base + 6);
                block.wo.backward_rows(&cache.z, p, &work.dx, Some(&mut work.dz), dw, db);
            }
            // z = a·V.
            F::gemm(p, d, p, F::one(), &work.dz, false, &cache.v, true, F::zero(), &mut work.da);
            F::gemm(p, p, d, F::one(), &cache.a, true, &work.dz, false, F::zero(), &mut work.dv);
            softmax_rows_backward(&cache.a, &mut work.da, p, p);
            // s = scale·Q·Kᵀ.
            F::gemm(p, p, d, scale, &work.da, false, &cache.k, false, F::zero(), &mut work.dq);
            F::gemm(p, p, d, scale, &work.da, true, &cache.q, false, F::zero(), &mut work.dk);

            work.dxin.copy_from_slice(&work.dx); // residual path into x_in
            {
                let (dw, db) = pair(grads, base);
                block.wq.backward_rows(x_in, p, &work.dq, Some(&mut work.dxin), dw, db);
            }
            {
                let (dw, db) = pair(grads, base + 2);
                block.wk.backward_rows(x_in, p, &work.dk, Some(&mut work.dxin), dw, db);
            }
            {
                let (dw, db) = pair(grads, base + 4);
                block.wv.backward_rows(x_in, p, &work.dv, Some(&mut work.dxin), dw, db);
            }
            std::mem::swap(&mut work.dx, &mut work.dxin);
        }

        // Position codes and patch embedding.
        grads.tensors[2].data_mut().iter_mut().zip(&work.dx).for_each(|(g, &v)| *g += v);
        let (dw, db) = pair(grads, 0);
        self.embed.backward_rows(&work.patches, p, &work.dx, None, dw, db);
        Ok(loss)
    }

    pub(crate) fn forward_batch(&self, view: &BatchView<F>) -> Result<Vec<F>> {
        let nested: Result<Vec<Vec<F>>> = chunk_ranges(view.n)
            .par_iter()
            .map(|&(s, e)| {
                let mut work = AttnWork::new(self.tokens, self.dim, self.patch, self.blocks.len());
                (s..e).map(|i| self.forward_sample(view.sample(i), view.h, view.w, &mut work)).collect()
            })
            .collect();
        Ok(nested?.into_iter().flatten().collect())
    }

    pub(crate) fn loss_and_grads(&self, view: &BatchView<F>, labels: &[u8], grads: &mut Gradients<F>) -> Result<f64> {
        let n = view.n;
        let nested: Result<Vec<(f64, Gradients<F>)>> = chunk_ranges(n)
            .par_iter()
            .map(|&(s, e)| {
                let mut work = AttnWork::new(self.tokens, self.dim, self.patch, self.blocks.len());
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

    /// Final block's post-ReLU MLP activations, flattened tokens × 2·dim —
    /// the last rectified layer before the head.
    pub fn representation(&self, sample: &[F], side: usize) -> Result<Vec<F>> {
        if sample.len() != side * side {
            return Err(Error::shape(format!("{side}×{side} image"), format!("{} elements", sample.len())));
        }
        let mut work = AttnWork::new(self.tokens, self.dim, self.patch, self.blocks.len());
        self.forward_sample(sample, side, side, &mut work)?;
        Ok(work.blocks.pop().unwrap().hm)
    }
}
