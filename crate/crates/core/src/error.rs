use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// Every violation found while reading a configuration, not just the first.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    ConfigList(Vec<String>),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The problem data contradicts itself (e.g. a violated soft constraint with a zero subgradient).
    #[error("model error: {0}")]
    Model(String),

    #[error("suspected infeasibility: {0}")]
    Infeasible(String),

    #[error("unreliable oracle: restart spread {spread:e} exceeds {limit:e}")]
    UnreliableOracle { spread: f64, limit: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("divergence at t={t}: max |y| = {max_abs:e}")]
    Divergence { t: usize, max_abs: f64 },

    #[error("{assumption} violated: {detail}")]
    Assumption {
        assumption: &'static str,
        detail: String,
    },

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            got,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
