use thiserror::Error;

/// Errors raised by the channel model, the metrics and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Too few peaks, clusters or samples to estimate a quantity.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A regression produced a non-decaying line.
    #[error("invalid fit: {0}")]
    InvalidFit(String),

    /// A text document could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
