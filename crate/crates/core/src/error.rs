use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("index {index} out of range for {len} devices")]
    Index { index: usize, len: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank deficient Gram matrix ({context}), condition number {condition:e}")]
    RankDeficient { context: String, condition: f64 },

    #[error("active device {device} has zero spectral efficiency")]
    ZeroRate { device: usize },

    #[error("active set is empty")]
    EmptySet,

    #[error("sensing threshold cannot be met within the power budgets for activation {mask:#b}")]
    Infeasible { mask: u64 },

    #[error("no activation vector admits a feasible power allocation")]
    AllInfeasible,

    #[error("instance too large: {0}")]
    SizeLimit(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
