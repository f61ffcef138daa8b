use std::path::PathBuf;

use mbm_core::MbmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] MbmError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const NUMERIC: i32 = 4;
    pub const IO: i32 = 5;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(MbmError::Parameter(_)) => Self::USAGE,
            CliError::Core(MbmError::Format(_)) => Self::PARSE,
            CliError::Core(MbmError::Numeric { .. }) => Self::NUMERIC,
            CliError::Io { .. } => Self::IO,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type Result<T> = std::result::Result<T, CliError>;
