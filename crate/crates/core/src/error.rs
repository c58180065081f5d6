use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not positive definite (failing pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },

    #[error("infeasible partition: {0}")]
    InfeasiblePartition(String),

    #[error("unsupported for this prior family: {0}")]
    Capability(String),

    #[error("stick-breaking truncation left residual mass {residual:e} after {sticks} sticks; increase the truncation cap")]
    Truncation { residual: f64, sticks: usize },

    #[error("enumeration too large: {0}")]
    Resource(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at row {row}, column {column}: {detail}")]
    Parse { row: usize, column: usize, detail: String },

    #[error("preprocessing error: {0}")]
    Preprocess(String),

    #[error("all {restarts} restarts failed; first failure: {first}")]
    AllRestartsFailed { restarts: usize, first: String },

    #[error("{path}: {cause}")]
    Io { path: String, cause: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            cause,
        }
    }
}
