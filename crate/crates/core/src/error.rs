use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BmeError {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed textual input (Newick, bracketing, distance matrices, numbers).
    #[error("parse error at position {position}: {cause}")]
    Parse { position: usize, cause: String },

    /// An inequality was violated by a vertex of the polytope.
    #[error("inequality {inequality} is violated by tree {counterexample}")]
    ValidityViolation {
        inequality: String,
        counterexample: String,
    },

    /// An enumeration-backed operation was asked to run past its size guard.
    #[error("n = {n} exceeds the guard of {limit} for {operation}")]
    Guard {
        operation: &'static str,
        n: usize,
        limit: usize,
    },
}

impl BmeError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BmeError::Domain(msg.into())
    }

    pub(crate) fn parse(position: usize, cause: impl Into<String>) -> Self {
        BmeError::Parse {
            position,
            cause: cause.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BmeError>;
