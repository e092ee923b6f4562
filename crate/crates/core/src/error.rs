use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-PD kernel matrix (Cholesky failed with jitter up to {max_jitter:e})")]
    NonPdKernel { max_jitter: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all {restarts} hyperparameter restarts failed; last error: {last}")]
    FitFailed { restarts: usize, last: Box<Error> },

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("no sign change of derivative in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("non-concave at mode (curvature {curvature})")]
    NonConcave { curvature: f64 },

    #[error("point {point:?} does not strictly dominate reference point {reference:?}")]
    InvalidReference {
        point: Vec<f64>,
        reference: Vec<f64>,
    },

    #[error("out of bounds: x[{index}] = {value} not in [{lo}, {hi}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("inconsistent result grid: {0}")]
    InconsistentGrid(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
