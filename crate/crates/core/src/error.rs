use thiserror::Error;

/// Errors raised by the toolkit. Every variant carries enough context to be
/// printed directly to a user.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),

    #[error("expected a relation of arity {expected}, got arity {found}")]
    Arity { expected: usize, found: usize },

    #[error("domain mismatch: {left} vs {right}")]
    DomainMismatch { left: usize, right: usize },

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("enumeration needs {needed} cases but the budget is {budget}; use sampled mode")]
    BudgetExceeded { needed: String, budget: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("certificate construction failed at {step}: {fact}")]
    Certificate { step: String, fact: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
