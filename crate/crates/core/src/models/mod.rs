//! The model zoo: four small architectures probing different mechanisms for
//! comparing image flanks — a plain conv stack (local, feed-forward), a
//! dilated conv stack (large receptive field in one pass), a three-cell
//! convolutional LSTM (iterative propagation), and a patch self-attention
//! baseline (global pairwise comparison).
//!
//! Every architecture ends in global-average-pool → one dense unit →
//! sigmoid, takes N×1×H×W batches of [0,1]-scaled pixels, and exposes the
//! same parameter/gradient surface to the trainer and the checker.

mod attention;
mod conv_net;
mod lstm_net;

pub use attention::AttentionNet;
pub use conv_net::{ConvKind, ConvNet};
pub use lstm_net::LstmNet;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{checkpoint, Differentiable, Gradients};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Samples per gradient-reduction chunk. The batch is always split at these
/// fixed boundaries and partial gradients are merged in chunk order, so the
/// floating-point summation order — and therefore every result bit — is
/// independent of how many threads execute the chunks.
pub(crate) const BATCH_CHUNK: usize = 8;

/// Fixed chunk boundaries for a batch of `n` samples (see [`BATCH_CHUNK`]).
pub(crate) fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(BATCH_CHUNK.max(1)).map(|s| (s, (s + BATCH_CHUNK).min(n))).collect()
}

/// Default dilation schedule for the wide-field stack.
pub fn default_dilation_schedule() -> Vec<usize> {
    vec![1, 1, 2, 2, 4, 4, 4]
}

/// Architecture + hyper-parameters; the JSON stored in every checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Dilated {
        channels: usize,
        #[serde(default = "default_dilation_schedule")]
        dilation_schedule: Vec<usize>,
    },
    Lstm3 {
        channels: usize,
        /// Unroll steps T.
        steps: usize,
    },
    ConvFf {
        channels: usize,
        depth: usize,
    },
    Attention {
        patch: usize,
        dim: usize,
        layers: usize,
    },
}

pub fn build_dilated(channels: usize) -> ModelSpec {
    ModelSpec::Dilated { channels, dilation_schedule: default_dilation_schedule() }
}

pub fn build_lstm3(channels: usize, steps: usize) -> ModelSpec {
    ModelSpec::Lstm3 { channels, steps }
}

pub fn build_conv_ff(channels: usize, depth: usize) -> ModelSpec {
    ModelSpec::ConvFf { channels, depth }
}

pub fn build_attention(patch: usize, dim: usize, layers: usize) -> ModelSpec {
    ModelSpec::Attention { patch, dim, layers }
}

/// Canonical pixel mapping shared by training and analysis: byte v ↦ v/255
/// as the network's input activation.
pub fn unit_scale_into<F: Scalar>(bytes: &[u8], out: &mut [F]) {
    debug_assert_eq!(bytes.len(), out.len());
    for (o, &b) in out.iter_mut().zip(bytes) {
        *o = F::from_real(b as f64 / 255.0);
    }
}

/// [`unit_scale_into`] into a fresh vector.
pub fn unit_scale<F: Scalar>(bytes: &[u8]) -> Vec<F> {
    let mut out = vec![F::zero(); bytes.len()];
    unit_scale_into(bytes, &mut out);
    out
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Dilated { channels, dilation_schedule } => {
                if *channels < 1 {
                    return Err(Error::InvalidSpec("dilated: channels must be ≥ 1".into()));
                }
                if dilation_schedule.len() != 7 {
                    return Err(Error::InvalidSpec(format!(
                        "dilated: exactly 7 conv layers required, schedule has {}",
                        dilation_schedule.len()
                    )));
                }
                if dilation_schedule.iter().any(|&d| d < 1) {
                    return Err(Error::InvalidSpec("dilated: dilations must be ≥ 1".into()));
                }
            }
            ModelSpec::Lstm3 { channels, steps } => {
                if *channels < 1 || *steps < 1 {
                    return Err(Error::InvalidSpec("lstm3: channels and steps must be ≥ 1".into()));
                }
            }
            ModelSpec::ConvFf { channels, depth } => {
                if *channels < 1 || *depth < 1 {
                    return Err(Error::InvalidSpec("conv_ff: channels and depth must be ≥ 1".into()));
                }
            }
            ModelSpec::Attention { patch, dim, layers } => {
                if *patch < 1 || *dim < 1 || *layers < 1 {
                    return Err(Error::InvalidSpec("attention: patch, dim, layers must be ≥ 1".into()));
                }
                if attention::BASE_SIDE % patch != 0 {
                    return Err(Error::InvalidSpec(format!(
                        "attention: patch {} does not divide the {}-pixel grid",
                        patch,
                        attention::BASE_SIDE
                    )));
                }
            }
        }
        Ok(())
    }

    /// Side length of the receptive field seen by one output unit before
    /// pooling, derived from the layer schedule. A 3×3 kernel at dilation d
    /// adds 2d to the side. For the recurrent stack the support radius grows
    /// by 1 per cell crossing — the three cells run in sequence within a
    /// step — plus 1 per additional unroll step, so the radius after T steps
    /// is T+2. `None` for attention, which is global after one block.
    pub fn receptive_field_side(&self) -> Option<usize> {
        match self {
            ModelSpec::Dilated { dilation_schedule, .. } => {
                Some(1 + 2 * dilation_schedule.iter().sum::<usize>())
            }
            ModelSpec::ConvFf { depth, .. } => Some(1 + 2 * depth),
            ModelSpec::Lstm3 { steps, .. } => Some(2 * (steps + 2) + 1),
            ModelSpec::Attention { .. } => None,
        }
    }

    /// Human-readable architecture tag, stable across versions.
    pub fn arch_name(&self) -> &'static str {
        match self {
            ModelSpec::Dilated { .. } => "dilated",
            ModelSpec::Lstm3 { .. } => "lstm3",
            ModelSpec::ConvFf { .. } => "conv_ff",
            ModelSpec::Attention { .. } => "attention",
        }
    }
}

/// A built model with parameters, generic over the scalar (f32 for training,
/// f64 for finite-difference verification).
#[derive(Clone, Debug)]
pub enum Model<F: Scalar> {
    Conv(ConvNet<F>),
    Lstm(LstmNet<F>),
    Attention(AttentionNet<F>),
}

impl<F: Scalar> Model<F> {
    /// Constructs the architecture and initializes parameters from `seed`
    /// (centered uniform, fan-in scaled; LSTM forget-gate bias +1).
    pub fn build(spec: &ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            ModelSpec::Dilated { channels, dilation_schedule } => {
                Model::Conv(ConvNet::new(ConvKind::Dilated, *channels, dilation_schedule.clone(), seed))
            }
            ModelSpec::ConvFf { channels, depth } => {
                Model::Conv(ConvNet::new(ConvKind::ConvFf, *channels, vec![1; *depth], seed))
            }
            ModelSpec::Lstm3 { channels, steps } => Model::Lstm(LstmNet::new(*channels, *steps, seed)),
            ModelSpec::Attention { patch, dim, layers } => {
                Model::Attention(AttentionNet::new(*patch, *dim, *layers, seed))
            }
        })
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            Model::Conv(m) => m.spec(),
            Model::Lstm(m) => m.spec(),
            Model::Attention(m) => m.spec(),
        }
    }

    /// Probabilities for a N×1×H×W batch.
    pub fn forward(&self, batch: &Tensor<F>) -> Result<Vec<F>> {
        let view = BatchView::of(batch)?;
        match self {
            Model::Conv(m) => m.forward_batch(&view),
            Model::Lstm(m) => m.forward_batch(&view),
            Model::Attention(m) => m.forward_batch(&view),
        }
    }

    /// Recurrent readout after exactly `t_prime` steps (LSTM3 only).
    pub fn readout_at_timestep(&self, batch: &Tensor<F>, t_prime: usize) -> Result<Vec<F>> {
        match self {
            Model::Lstm(m) => m.readout_at(&BatchView::of(batch)?, t_prime),
            _ => Err(Error::InvalidInput(format!(
                "readout_at_timestep needs an lstm3 model, got {}",
                self.spec().arch_name()
            ))),
        }
    }

    /// Analysis tap: the flattened activations feeding the classifier head.
    /// Rules per architecture — dilated/conv_ff: output of the last ReLU
    /// (before pooling); attention: the final block's ReLU hidden layer;
    /// lstm3: cell 3's hidden map at the last step (its gates are
    /// tanh/sigmoid-bounded — there is no rectified layer — and the last
    /// step's map is what the head reads).
    pub fn representation(&self, sample: &[F], side: usize) -> Result<Vec<F>> {
        match self {
            Model::Conv(m) => m.representation(sample, side),
            Model::Lstm(m) => m.hidden_at(sample, side, m.steps),
            Model::Attention(m) => m.representation(sample, side),
        }
    }

    /// Cell 3 hidden map after `t_prime` steps, flattened C×H×W (LSTM3 only).
    pub fn hidden_at_timestep(&self, sample: &[F], side: usize, t_prime: usize) -> Result<Vec<F>> {
        match self {
            Model::Lstm(m) => m.hidden_at(sample, side, t_prime),
            _ => Err(Error::InvalidInput(format!(
                "hidden_at_timestep needs an lstm3 model, got {}",
                self.spec().arch_name()
            ))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()>
    where
        F: Scalar,
    {
        let spec_json = serde_json::to_value(self.spec())?;
        let params32: Vec<Tensor<f32>> = self.params().iter().map(|t| t.cast::<f32>()).collect();
        let refs: Vec<&Tensor<f32>> = params32.iter().collect();
        checkpoint::save_checkpoint(path, &spec_json, &refs)
    }

    /// Loads a checkpoint, validating the spec and every tensor shape.
    pub fn load(path: &Path) -> Result<Self> {
        let (spec_json, tensors) = checkpoint::load_checkpoint(path)?;
        let spec: ModelSpec = serde_json::from_value(spec_json)
            .map_err(|e| Error::Checkpoint(format!("{}: bad model spec: {e}", path.display())))?;
        let mut model = Model::build(&spec, 0)?;
        {
            let mut params = model.params_mut();
            if params.len() != tensors.len() {
                return Err(Error::Checkpoint(format!(
                    "{}: expected {} parameter tensors, found {}",
                    path.display(),
                    params.len(),
                    tensors.len()
                )));
            }
            for (p, t) in params.iter_mut().zip(&tensors) {
                if p.shape() != t.shape() {
                    return Err(Error::Checkpoint(format!(
                        "{}: tensor shape {:?} does not match the spec's {:?}",
                        path.display(),
                        t.shape(),
                        p.shape()
                    )));
                }
                **p = t.cast::<F>();
            }
        }
        Ok(model)
    }
}

impl<F: Scalar> Differentiable<F> for Model<F> {
    fn param_names(&self) -> Vec<String> {
        match self {
            Model::Conv(m) => m.param_names(),
            Model::Lstm(m) => m.param_names(),
            Model::Attention(m) => m.param_names(),
        }
    }

    fn params(&self) -> Vec<&Tensor<F>> {
        match self {
            Model::Conv(m) => m.params(),
            Model::Lstm(m) => m.params(),
            Model::Attention(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        match self {
            Model::Conv(m) => m.params_mut(),
            Model::Lstm(m) => m.params_mut(),
            Model::Attention(m) => m.params_mut(),
        }
    }

    fn loss(&self, batch: &Tensor<F>, labels: &[u8]) -> Result<f64> {
        let probs = self.forward(batch)?;
        Ok(crate::engine::loss::bce_mean(&probs, labels))
    }

    fn loss_and_grads(&self, batch: &Tensor<F>, labels: &[u8], grads: &mut Gradients<F>) -> Result<f64> {
        let view = BatchView::of(batch)?;
        if labels.len() != view.n {
            return Err(Error::shape(format!("{} labels", view.n), format!("{}", labels.len())));
        }
        match self {
            Model::Conv(m) => m.loss_and_grads(&view, labels, grads),
            Model::Lstm(m) => m.loss_and_grads(&view, labels, grads),
            Model::Attention(m) => m.loss_and_grads(&view, labels, grads),
        }
    }
}

/// Validated view of an N×1×H×W batch.
pub(crate) struct BatchView<'a, F> {
    pub data: &'a [F],
    pub n: usize,
    pub h: usize,
    pub w: usize,
}

impl<'a, F: Scalar> BatchView<'a, F> {
    fn of(batch: &'a Tensor<F>) -> Result<Self> {
        let s = batch.shape();
        if s.len() != 4 || s[1] != 1 {
            return Err(Error::shape("N×1×H×W batch", format!("{:?}", s)));
        }
        Ok(BatchView { data: batch.data(), n: s[0], h: s[2], w: s[3] })
    }

    pub fn sample(&self, i: usize) -> &'a [F] {
        let len = self.h * self.w;
        &self.data[i * len..(i + 1) * len]
    }
}

/// Fan-in-scaled centered uniform init: U(−1/√fan_in, 1/√fan_in). Each
/// tensor draws from its own (seed, tensor index) stream so adding or
/// removing a later tensor never shifts earlier ones.
/// Fills a tensor i.i.d. uniform on (−bound, bound) from the model's seeded
/// stream; `tensor_idx` keeps every tensor on its own substream.
pub(crate) fn init_uniform<F: Scalar>(t: &mut Tensor<F>, bound: f64, seed: u64, tensor_idx: u64) {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, &[tensor_idx]);
    for v in t.data_mut() {
        *v = F::from_real(rng.gen_range(-bound..bound));
    }
}

/// He-uniform init (weight variance 2/fan_in) for weights feeding a ReLU.
/// The rectifier halves activation variance each layer, so anything with
/// less gain decays geometrically through a deep stack — at 1/√fan_in
/// bounds, a 7-layer stack attenuates signal by ~6⁻⁷ and gradients
/// effectively vanish before learning can start.
pub(crate) fn init_he_uniform<F: Scalar>(t: &mut Tensor<F>, fan_in: usize, seed: u64, tensor_idx: u64) {
    init_uniform(t, (6.0 / fan_in as f64).sqrt(), seed, tensor_idx);
}

/// Glorot-uniform init (variance 2/(fan_in+fan_out)) for classifier heads,
/// bounded-gate convolutions, and attention projections — the common
/// framework default for non-rectified layers.
pub(crate) fn init_glorot_uniform<F: Scalar>(
    t: &mut Tensor<F>,
    fan_in: usize,
    fan_out: usize,
    seed: u64,
    tensor_idx: u64,
) {
    init_uniform(t, (6.0 / (fan_in + fan_out) as f64).sqrt(), seed, tensor_idx);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn receptive_fields_match_hand_computation() {
        assert_eq!(build_dilated(8).receptive_field_side(), Some(37));
        assert_eq!(build_conv_ff(8, 7).receptive_field_side(), Some(15));
        assert_eq!(build_conv_ff(8, 1).receptive_field_side(), Some(3));
        // One step crosses all three cells (radius 3); each further step
        // adds one more convolution somewhere along the path.
        assert_eq!(build_lstm3(4, 1).receptive_field_side(), Some(7));
        assert_eq!(build_lstm3(4, 5).receptive_field_side(), Some(15));
        assert_eq!(build_lstm3(4, 30).receptive_field_side(), Some(65));
        assert_eq!(build_attention(4, 16, 2).receptive_field_side(), None);
        // The dilated stack sees across a 20-pixel image; the 7-layer plain
        // stack cannot.
        assert!(build_dilated(8).receptive_field_side().unwrap() >= 20);
        assert!(build_conv_ff(8, 7).receptive_field_side().unwrap() < 20);
    }

    #[test]
    fn spec_validation() {
        assert!(build_dilated(16).validate().is_ok());
        assert!(ModelSpec::Dilated { channels: 8, dilation_schedule: vec![1, 2, 4] }.validate().is_err());
        assert!(ModelSpec::Dilated { channels: 0, dilation_schedule: default_dilation_schedule() }
            .validate()
            .is_err());
        assert!(build_lstm3(16, 30).validate().is_ok());
        assert!(ModelSpec::Lstm3 { channels: 16, steps: 0 }.validate().is_err());
        assert!(build_attention(4, 32, 2).validate().is_ok());
        assert!(ModelSpec::Attention { patch: 3, dim: 32, layers: 2 }.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        for spec in [
            build_dilated(32),
            ModelSpec::Dilated { channels: 8, dilation_schedule: vec![4; 7] },
            build_lstm3(16, 30),
            build_conv_ff(32, 7),
            build_attention(4, 32, 2),
        ] {
            let json = serde_json::to_string(&spec).unwrap();
            let back: ModelSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
        }
    }

    #[test]
    fn unknown_spec_keys_are_rejected() {
        let r = serde_json::from_str::<ModelSpec>(r#"{"arch":"lstm3","channels":4,"steps":5,"layres":2}"#);
        assert!(r.is_err());
    }
}
