use thiserror::Error;

/// Errors surfaced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation was handed a value outside its domain.
    /// The message names the offending parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An index or count argument is outside the range the receiver supports.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A computation has no defined result for the given inputs.
    #[error("domain error: {0}")]
    Domain(String),

    /// Serialized model data could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Configuration file errors; the message names the offending key.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
