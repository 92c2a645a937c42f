use std::path::PathBuf;

use thiserror::Error;

/// Failure classes; each maps to its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("simulation failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub const EXIT_USAGE: i32 = 2;
    pub const EXIT_PARSE: i32 = 3;
    pub const EXIT_VALIDATION: i32 = 4;
    pub const EXIT_RUNTIME: i32 = 5;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => Self::EXIT_USAGE,
            CliError::Parse { .. } => Self::EXIT_PARSE,
            CliError::Validation(_) => Self::EXIT_VALIDATION,
            CliError::Io { .. } | CliError::Runtime(_) => Self::EXIT_RUNTIME,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<aglink_core::Error> for CliError {
    fn from(e: aglink_core::Error) -> Self {
        if e.is_config() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
