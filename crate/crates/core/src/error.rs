use thiserror::Error;

use crate::ctensor::Shape;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Shape,
        rhs: Shape,
    },

    #[error("invalid shape for {op}: {reason}")]
    InvalidShape { op: &'static str, reason: String },

    #[error("buffer of length {len} does not match shape {shape}")]
    LengthMismatch { len: usize, shape: Shape },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid magnitude {0}: magnitudes must be nonnegative")]
    InvalidMagnitude(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("loss must be a real scalar: {0}")]
    InvalidLoss(String),

    #[error("parameter `{0}` has no gradient")]
    MissingGradient(String),

    #[error("value type mismatch in {op}: expected {expected}")]
    ValueKind {
        op: &'static str,
        expected: &'static str,
    },

    #[error("STFT window/hop combination is not invertible: {0}")]
    ColaViolation(String),

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("degenerate sample set: {0}")]
    Degenerate(String),

    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },

    #[error("unsupported audio format: {0}")]
    UnsupportedAudio(String),

    #[error("malformed parameter file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
