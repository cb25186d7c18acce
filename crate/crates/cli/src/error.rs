use std::path::PathBuf;

use qsd_core::QsdError;

/// CLI failures, split by exit code: usage problems exit with 1, numerical
/// or content failures with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Numerical(#[from] QsdError),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Format { .. } | CliError::Numerical(_) | CliError::Invalid(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
