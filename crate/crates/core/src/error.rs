//! Crate-wide error type. Every fallible public API returns [`Result`].

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A family / dataset / model / experiment description failed validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A runtime argument (shape, index, flag combination) is unusable.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two tensors or datasets disagree about their dimensions.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// Pearson correlation over a constant vector has no defined value.
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    /// Cosine distance is undefined when representation vectors are all zero;
    /// carries every offending vector index.
    #[error("zero-norm representation vectors at indices {0:?}")]
    ZeroVectors(Vec<usize>),

    /// Expected dataset files are missing or truncated.
    #[error("dataset error at {path}: {reason}")]
    Dataset { path: PathBuf, reason: String },

    /// An output already exists and `--force` was not given.
    #[error("refusing to overwrite {0} (pass --force to replace it)")]
    WouldOverwrite(PathBuf),

    /// Training produced a non-finite loss or weight.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// A checkpoint file is malformed or does not match the requested model.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used by shape checks all over the engine.
    pub fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch { expected: expected.into(), got: got.into() }
    }
}
