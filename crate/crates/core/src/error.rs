use thiserror::Error;

use crate::gaussian::ModeLabel;

/// Errors produced by the analysis engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode {0} is not present in the state")]
    UnknownMode(ModeLabel),

    #[error("mode {0} appears more than once")]
    DuplicateMode(ModeLabel),

    #[error("covariance matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("covariance matrix contains non-finite entries")]
    NonFinite,

    #[error("covariance matrix is not bona fide (smallest symplectic eigenvalue {0})")]
    NotBonaFide(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("user index {index} out of range for a network of {users} users")]
    UserOutOfRange { index: usize, users: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}
