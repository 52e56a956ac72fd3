use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the coordination library.
#[derive(Debug, Error)]
pub enum CoordError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A pairing/partitioning constraint does not hold. `clause` names the
    /// violated rule (e.g. "an-exclusive-per-partition").
    #[error("constraint violated ({clause}): {detail}")]
    ConstraintViolation { clause: &'static str, detail: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large for exact search: {k} UEs exceeds cap of {cap}")]
    Capacity { k: usize, cap: usize },

    #[error("numerical routine did not converge: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CoordError> = std::result::Result<T, E>;

impl CoordError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoordError::Io {
            path: path.into(),
            source,
        }
    }
}
