use thiserror::Error;

/// Errors raised by the copolymer library.
#[derive(Debug, Error)]
pub enum Error {
    /// An index or size beyond a precomputed horizon.
    #[error("index {index} outside supported range {min}..={max}")]
    Range { index: usize, min: usize, max: usize },

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operation is not available for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed text input (return-law tables, config files).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
