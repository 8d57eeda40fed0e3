use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the probability, bound and laboratory routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("negative mass {value:e} at index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("distribution sums to {sum} (deviation {deviation:e}, tolerance {tolerance:e})")]
    NotNormalized {
        sum: f64,
        deviation: f64,
        tolerance: f64,
    },

    #[error("non-finite entry {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("empty distribution")]
    Empty,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("x symbol {0} has zero marginal mass; full support is required")]
    MissingSupport(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("negative residual {value:e} at (x={x}, y={y}) while building the coupling")]
    NegativeResidual { x: usize, y: usize, value: f64 },

    #[error("no curve points align within {slack} bits")]
    CurveMismatch { slack: f64 },

    #[error("counterexample found: {0}")]
    CounterexampleFound(String),

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
