//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HardyError {
    /// Malformed construction input (shape mismatch, bad parameter range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operation needs a composition law and the group does not carry one.
    #[error("group `{0}` has no composition law")]
    NoGroupLaw(String),

    /// Operation restricted to groups of a particular step.
    #[error("operation requires a step-{required} group, got step {actual}")]
    WrongStep { required: usize, actual: usize },

    /// A stated hypothesis of the inequality being evaluated fails.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Test-function support leaves the domain of integration.
    #[error("support violation: {0}")]
    SupportViolation(String),

    /// Run-configuration parsing or validation failure.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HardyError>;
