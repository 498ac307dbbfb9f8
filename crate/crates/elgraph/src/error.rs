//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("product expansion of {vertices} vertices exceeds budget of {budget}")]
    ExpansionTooLarge { vertices: usize, budget: usize },

    #[error("linear solver failed to converge; residual norm {residual:.3e}")]
    SolverBreakdown { residual: f64 },

    #[error("evaluating {rule} at {site}: {source}")]
    Evaluation {
        rule: String,
        site: String,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(String),

    #[error("csv row {row}: {msg}")]
    CsvRow { row: usize, msg: String },

    #[error("graph json: {0}")]
    GraphJson(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
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
}
