use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("malformed snapshot {path}: {reason}")]
    MalformedSnapshot { path: PathBuf, reason: String },

    #[error("stability conditions not guaranteed: {0}")]
    StabilityRefused(String),

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("linear solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerically singular matrix")]
    Singular,

    #[error("{0}")]
    Convergence(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Validation-class errors map to CLI exit code 2, solver failures to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvalidConfig(_)
            | Error::SizeMismatch { .. }
            | Error::MalformedSnapshot { .. }
            | Error::StabilityRefused(_)
            | Error::Convergence(_) => 2,
            Error::SolverBreakdown(_)
            | Error::SolverNotConverged { .. }
            | Error::NonFinite(_)
            | Error::Singular => 3,
            Error::Io { .. } => 1,
        }
    }
}
