//! Core library for studying whether small neural networks learn a
//! generalizable rule for bilateral mirror symmetry.
//!
//! The crate has three parts:
//! * [`imggen`] — deterministic synthetic stimulus families (noise flanks,
//!   mid-gray bands, stripe pairs) and their binary dataset format;
//! * [`engine`] + [`models`] + [`training`] — a small dense-tensor neural
//!   engine with hand-derived gradients, the four model architectures, and
//!   the training/grid-search/evaluation protocol;
//! * [`analysis`] — representational dissimilarity matrices and prototype
//!   correlations, misclassification histograms, timestep sweeps, and
//!   activation clustering.
//!
//! All numeric code is generic over [`Scalar`] (f32 or f64). Training runs
//! in f32; gradient verification instantiates the same code at f64, where
//! central finite differences are trustworthy.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod imggen;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod svg;
pub mod table;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Production tensor type: 32-bit floats.
pub type Tensor32 = tensor::Tensor<f32>;
/// Verification tensor type: 64-bit floats for finite-difference oracles.
pub type Tensor64 = tensor::Tensor<f64>;
