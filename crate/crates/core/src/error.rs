use std::io;

use thiserror::Error;

/// Errors produced by the sampling, reconstruction and codec pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// Measurements were taken under a different permutation than the one
    /// supplied for reconstruction.
    #[error("permutation tag mismatch: measurements use `{measured}`, decoder given `{given}`")]
    TagMismatch { measured: String, given: String },

    #[error("least-squares refit is rank deficient on a support of size {0}")]
    RankDeficient(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
