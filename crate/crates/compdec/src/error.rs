//! Crate-wide error type.
//!
//! Every fallible operation in the crate reports one of a small number of
//! error families.  The CLI maps each family to a distinct exit code, so
//! the classification here is part of the external contract:
//!
//! * [`Error::Parse`] / [`Error::Io`] — a matrix file could not be read or
//!   written.
//! * [`Error::Validation`] — the caller handed us input that violates a
//!   documented precondition (wrong dimensions, non-finite entries, a
//!   cardinality bound, a non-correlation matrix, …).
//! * [`Error::Solver`] — an iterative solver failed to reach its target
//!   accuracy, or diagnosed the problem as infeasible/unbounded.
//! * [`Error::Hypothesis`] — the computation ran, but its output is
//!   inconsistent with the structural hypotheses the method relies on.
//!   This is how model violations surface: as explicit errors carrying the
//!   offending residual, never as silently wrong output.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for all operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An input failed a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A matrix file could not be parsed.  `line` is 1-based.
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Reading or writing a file failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// An iterative solver did not converge, or diagnosed the problem as
    /// infeasible or unbounded.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The computed quantities contradict the structural hypotheses of the
    /// method; the input is most likely outside the guaranteed model class.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
}

impl Error {
    /// Shorthand for a [`Error::Validation`] with a formatted message.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Shorthand for a [`Error::Solver`] with a formatted message.
    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    /// Shorthand for a [`Error::Hypothesis`] with a formatted message.
    pub fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }
}
