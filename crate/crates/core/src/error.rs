use std::io;

use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The variants map onto the process exit codes used by the command line:
/// configuration and usage problems exit with 2, I/O failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Shapes, dimensions or settings that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was invoked in a state where it is not allowed.
    #[error("usage error: {0}")]
    Usage(String),
    /// Malformed or non-finite data.
    #[error("data error: {0}")]
    Data(String),
    #[error("not enough data: have {have}, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
