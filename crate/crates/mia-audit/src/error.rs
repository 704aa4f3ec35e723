//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuditError {
    /// A precondition on user-supplied values failed.
    #[error("validation error: {0}")]
    Validation(String),

    /// An evaluation set or frequency table cannot support the requested
    /// operation (empty, unusable, or mismatched with its companion).
    #[error("unusable input: {0}")]
    Unusable(String),

    /// A subgroup required by the operation is absent from the data.
    #[error("subgroup {subgroup} is absent from the evaluation set")]
    MissingSubgroup { subgroup: usize },

    /// Equalized-odds post-processing could not reach a common operating
    /// point within tolerance.
    #[error("equalized-odds post-processing infeasible: best achievable gap {best_gap:.6} exceeds tolerance {tol:.6}")]
    EoInfeasible { best_gap: f64, tol: f64 },

    /// A generalized-equality-of-odds precondition failed.
    #[error("GEO precondition failed: {0}")]
    GeoPrecondition(String),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, AuditError>;

impl AuditError {
    pub fn validation(msg: impl Into<String>) -> Self {
        AuditError::Validation(msg.into())
    }

    pub fn unusable(msg: impl Into<String>) -> Self {
        AuditError::Unusable(msg.into())
    }
}
