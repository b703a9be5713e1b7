use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: setgc_core::Error },
    #[error("{0}")]
    Usage(String),
    #[error("edge {from} -> {to}: {source}")]
    Edge { from: String, to: String, source: setgc_core::Error },
    #[error(transparent)]
    Core(#[from] setgc_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_owned(), source }
    }

    pub fn parse(path: &Path, message: String) -> Self {
        CliError::Parse { path: path.to_owned(), message }
    }

    pub fn invalid(path: &Path, source: setgc_core::Error) -> Self {
        CliError::Invalid { path: path.to_owned(), source }
    }

    /// 2 for invalid input, 3 for numerical failure, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } | CliError::Usage(_) => 2,
            CliError::Io { .. } => 2,
            CliError::Edge { source, .. } | CliError::Core(source) => {
                if source.is_numerical() {
                    3
                } else {
                    2
                }
            }
        }
    }
}
