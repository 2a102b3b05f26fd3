use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument or a pair of inputs is outside the admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("coefficient matrix is not positive definite at node ({i}, {j}) = ({x}, {y}): smallest eigenvalue {min_eig}")]
    NotPositiveDefinite {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        min_eig: f64,
    },

    #[error("eigensolver did not converge: max residual ||A e - lambda e|| = {residual:e}")]
    EigenNonConvergence { residual: f64 },

    #[error("CFL condition violated: {0}")]
    Cfl(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
