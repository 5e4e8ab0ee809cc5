use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data, invalid parameters or malformed files.
    Data,
    /// A numerical procedure failed (non-convergence, non-finite values).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("capture has no sample_rate_hz declaration")]
    MissingSampleRate,

    #[error("no samples")]
    NoSamples,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero dynamic range: all samples equal {0}")]
    ZeroDynamicRange(f64),

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: f64, right: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("cluster size {n} is not below half the series length {len}")]
    ClusterTooLarge { n: usize, len: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("all-zero series: autocorrelation is undefined")]
    ZeroEnergy,

    #[error("shape mismatch in {layer}: {message}")]
    Shape { layer: String, message: String },

    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("root finding did not converge: {0}")]
    NonConvergence(String),

    #[error("unexpected end of model file")]
    UnexpectedEof,

    #[error("not a model file (bad magic)")]
    BadMagic,

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonConvergence(_)
            | Error::NonFiniteActivation { .. }
            | Error::NonFiniteLoss { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
