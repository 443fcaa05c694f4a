use std::io;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("angle {0}° is outside [-90°, 90°]")]
    AngleOutOfRange(f64),

    #[error("{sources} sources cannot be resolved by a {elements}-element array")]
    TooManySources { sources: usize, elements: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e}, tolerance {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("Jacobi iteration did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("all eigenvalues are zero")]
    ZeroSpectrum,

    #[error("label {k} outside 1..={g}")]
    LabelOutOfRange { k: usize, g: usize },

    #[error("rejection sampling gave up after {0} attempts")]
    Infeasible(usize),

    #[error("snapshot is identically zero")]
    ZeroSnapshot,

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
