use thiserror::Error;

pub type Result<T> = std::result::Result<T, MbmError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MbmError {
    /// Invalid argument, dimension mismatch or malformed configuration.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A non-finite value appeared during optimization.
    #[error("numeric failure at trial {trial}: {reason}")]
    Numeric { trial: u64, reason: String },
    #[error("format error: {0}")]
    Format(String),
}

impl MbmError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        MbmError::Parameter(msg.into())
    }
}
