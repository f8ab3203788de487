//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by certificate evaluators, special functions, and the lab.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("argument out of domain: {0}")]
    Domain(String),

    /// A scalar objective was non-finite on too much of its search range.
    #[error("objective not finite on search range: {0}")]
    NonFiniteObjective(String),

    /// A custom CGF table failed validation.
    #[error("invalid CGF table: {0}")]
    InvalidCgfTable(String),

    /// A discrete problem description failed validation.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// A confidence-budget schedule failed validation.
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
