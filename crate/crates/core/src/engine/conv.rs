//! Dilated 3×3 convolution with same-size zero padding.
//!
//! The hot path lowers each sample to an im2col matrix and runs one GEMM;
//! `conv2d_naive` is the quintuple-loop reference the fast path is verified
//! against. All per-sample routines take raw slices plus explicit dims so
//! the recurrent cells can reuse them on concatenated channel stacks.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

/// A 3×3 convolution layer: weight `[out_ch, in_ch, 3, 3]`, bias `[out_ch]`,
/// zero padding of `dilation` pixels so spatial extents are preserved.
#[derive(Clone, Debug)]
pub struct Conv2d<F> {
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
    pub in_ch: usize,
    pub out_ch: usize,
    pub dilation: usize,
}

impl<F: Scalar> Conv2d<F> {
    pub fn new(in_ch: usize, out_ch: usize, dilation: usize) -> Self {
        assert!(dilation >= 1, "dilation must be ≥ 1");
        Conv2d {
            weight: Tensor::zeros(&[out_ch, in_ch, KERNEL, KERNEL]),
            bias: Tensor::zeros(&[out_ch]),
            in_ch,
            out_ch,
            dilation,
        }
    }

    /// Required scratch length for an h×w input.
    pub fn cols_len(&self, h: usize, w: usize) -> usize {
        self.in_ch * TAPS * h * w
    }

    /// y = W ⊛ x + b for one sample. `cols` is caller-provided scratch of
    /// at least [`Self::cols_len`] elements.
    pub fn forward(&self, x: &[F], h: usize, w: usize, y: &mut [F], cols: &mut [F]) -> Result<()> {
        self.check_dims(x.len(), y.len(), h, w)?;
        let hw = h * w;
        let cols = &mut cols[..self.in_ch * TAPS * hw];
        im2col(x, self.in_ch, h, w, self.dilation, cols);
        F::gemm(self.out_ch, self.in_ch * TAPS, hw, F::one(), self.weight.data(), false, cols, false, F::zero(), y);
        for o in 0..self.out_ch {
            let b = self.bias.data()[o];
            for v in &mut y[o * hw..(o + 1) * hw] {
                *v += b;
            }
        }
        Ok(())
    }

    /// Accumulates parameter gradients and (optionally) the input gradient
    /// for one sample. `dx` may be `None` for the first layer of a network.
    /// `dw`/`db` are accumulated into, not overwritten.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        x: &[F],
        dy: &[F],
        h: usize,
        w: usize,
        dx: Option<&mut [F]>,
        dw: &mut Tensor<F>,
        db: &mut Tensor<F>,
        cols: &mut [F],
    ) -> Result<()> {
        self.check_dims(x.len(), dy.len(), h, w)?;
        debug_assert_eq!(dw.shape(), self.weight.shape());
        debug_assert_eq!(db.shape(), self.bias.shape());
        let hw = h * w;
        let k = self.in_ch * TAPS;
        let cols = &mut cols[..k * hw];

        for o in 0..self.out_ch {
            let mut s = F::zero();
            for &g in &dy[o * hw..(o + 1) * hw] {
                s += g;
            }
            db.data_mut()[o] += s;
        }

        // dW += dY · cols(x)ᵀ
        im2col(x, self.in_ch, h, w, self.dilation, cols);
        F::gemm(self.out_ch, hw, k, F::one(), dy, false, cols, true, F::one(), dw.data_mut());

        // dX += col2im(Wᵀ · dY), reusing the same scratch for the column grads.
        if let Some(dx) = dx {
            F::gemm(k, self.out_ch, hw, F::one(), self.weight.data(), true, dy, false, F::zero(), cols);
            col2im_add(cols, self.in_ch, h, w, self.dilation, dx);
        }
        Ok(())
    }

    fn check_dims(&self, x_len: usize, y_len: usize, h: usize, w: usize) -> Result<()> {
        if x_len != self.in_ch * h * w {
            return Err(Error::shape(
                format!("{}x{}x{} input", self.in_ch, h, w),
                format!("{} elements", x_len),
            ));
        }
        if y_len != self.out_ch * h * w {
            return Err(Error::shape(
                format!("{}x{}x{} output", self.out_ch, h, w),
                format!("{} elements", y_len),
            ));
        }
        Ok(())
    }
}

/// Lowers one `ch×h×w` sample into a `(ch·9) × (h·w)` matrix where column
/// (i,j) lists the taps the kernel sees at that position (zeros where a
/// dilated tap leaves the image).
pub fn im2col<F: Scalar>(x: &[F], ch: usize, h: usize, w: usize, dilation: usize, out: &mut [F]) {
    let hw = h * w;
    debug_assert_eq!(x.len(), ch * hw);
    debug_assert_eq!(out.len(), ch * TAPS * hw);
    let d = dilation as isize;
    for c in 0..ch {
        let plane = &x[c * hw..(c + 1) * hw];
        for ku in 0..KERNEL {
            let dr = d * (ku as isize - 1);
            for kv in 0..KERNEL {
                let dc = d * (kv as isize - 1);
                let row = &mut out[(c * TAPS + ku * KERNEL + kv) * hw..][..hw];
                // Columns j with 0 ≤ j+dc < w form one contiguous run per row.
                let j0 = (-dc).max(0) as usize;
                let j1 = ((w as isize - dc).min(w as isize)).max(0) as usize;
                for i in 0..h {
                    let si = i as isize + dr;
                    let dst = &mut row[i * w..(i + 1) * w];
                    if si < 0 || si >= h as isize || j0 >= j1 {
                        dst.fill(F::zero());
                        continue;
                    }
                    let src = &plane[si as usize * w..(si as usize + 1) * w];
                    dst[..j0].fill(F::zero());
                    dst[j0..j1]
                        .copy_from_slice(&src[(j0 as isize + dc) as usize..(j1 as isize + dc) as usize]);
                    dst[j1..].fill(F::zero());
                }
            }
        }
    }
}

/// Transpose of [`im2col`] as a scatter-add: folds column-space gradients
/// back onto the input plane. Accumulates into `out`.
pub fn col2im_add<F: Scalar>(cols: &[F], ch: usize, h: usize, w: usize, dilation: usize, out: &mut [F]) {
    let hw = h * w;
    debug_assert_eq!(out.len(), ch * hw);
    debug_assert_eq!(cols.len(), ch * TAPS * hw);
    let d = dilation as isize;
    for c in 0..ch {
        let plane = &mut out[c * hw..(c + 1) * hw];
        for ku in 0..KERNEL {
            let dr = d * (ku as isize - 1);
            for kv in 0..KERNEL {
                let dc = d * (kv as isize - 1);
                let row = &cols[(c * TAPS + ku * KERNEL + kv) * hw..][..hw];
                let j0 = (-dc).max(0) as usize;
                let j1 = ((w as isize - dc).min(w as isize)).max(0) as usize;
                if j0 >= j1 {
                    continue;
                }
                for i in 0..h {
                    let si = i as isize + dr;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    let src = &row[i * w + j0..i * w + j1];
                    let dst = &mut plane[(si as usize * w as usize) as usize..][..w];
                    for (j, &v) in src.iter().enumerate() {
                        dst[(j0 as isize + j as isize + dc) as usize] += v;
                    }
                }
            }
        }
    }
}

/// Reference convolution: direct quintuple loop over output channel,
/// position, input channel, and kernel taps. Slow, obviously correct.
pub fn conv2d_naive<F: Scalar>(
    x: &[F],
    in_ch: usize,
    h: usize,
    w: usize,
    weight: &Tensor<F>,
    bias: &Tensor<F>,
    dilation: usize,
) -> Vec<F> {
    let out_ch = weight.shape()[0];
    debug_assert_eq!(weight.shape(), &[out_ch, in_ch, KERNEL, KERNEL]);
    let hw = h * w;
    let d = dilation as isize;
    let wdat = weight.data();
    let mut y = vec![F::zero(); out_ch * hw];
    for o in 0..out_ch {
        for i in 0..h as isize {
            for j in 0..w as isize {
                let mut acc = bias.data()[o];
                for c in 0..in_ch {
                    for ku in 0..KERNEL {
                        for kv in 0..KERNEL {
                            let si = i + d * (ku as isize - 1);
                            let sj = j + d * (kv as isize - 1);
                            if si < 0 || si >= h as isize || sj < 0 || sj >= w as isize {
                                continue;
                            }
                            let xv = x[c * hw + si as usize * w + sj as usize];
                            let wv = wdat[((o * in_ch + c) * KERNEL + ku) * KERNEL + kv];
                            acc += wv * xv;
                        }
                    }
                }
                y[o * hw + i as usize * w + j as usize] = acc;
            }
        }
    }
    y
}
