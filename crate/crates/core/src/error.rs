use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative solver ran out of iterations. Retryable with another seed.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e}, seed {seed:?})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        seed: Option<u64>,
        last_iterate: Vec<f64>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error at {path}: {source}")]
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

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether retrying with a different seed may succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
