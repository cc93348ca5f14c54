//! Crate-wide error type.
//!
//! Every failure carries one of four machine-parseable categories
//! (`config`, `data`, `numeric`, `io`); the CLI prints
//! `error: <category>: <message>` and exits nonzero.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad indices, incompatible shapes, violated
    /// preconditions that are caller mistakes rather than data problems.
    #[error("{0}")]
    Config(String),

    /// Rejected input data (all-zero groups, malformed files, truncated
    /// payloads).
    #[error("{0}")]
    Data(String),

    /// Numerical failure: non-finite values, unstable time stepping,
    /// degenerate partitions.
    #[error("{0}")]
    Numeric(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Stable category token used in CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Numeric(_) => "numeric",
            Error::Io(_) => "io",
        }
    }
}
