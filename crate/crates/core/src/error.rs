//! Error type shared across the crate.
//!
//! Variants mirror the failure classes of the pipeline: `Domain` for
//! arguments that violate a documented precondition, `State` for operations
//! invoked on data that cannot support them (empty library, empty evaluation
//! set), `Parse` for malformed files, `Numeric` for linear-algebra
//! breakdowns, and `Config` for inconsistent configuration.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is valid but the current data cannot support it.
    #[error("state error: {0}")]
    State(String),
    /// A file or byte stream did not match its documented format.
    #[error("parse error: {0}")]
    Parse(String),
    /// A numeric routine broke down (singular factorization, non-finite value).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Configuration values are individually or mutually invalid.
    #[error("config error: {0}")]
    Config(String),
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Builds a `Domain` error from anything displayable.
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Builds a `State` error from anything displayable.
    pub fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    /// Builds a `Parse` error from anything displayable.
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// Builds a `Numeric` error from anything displayable.
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Builds a `Config` error from anything displayable.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
