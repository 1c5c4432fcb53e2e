use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI invocation, each tied to one exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unusable configuration; `field` is a dotted path into the document.
    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("oracle capacity exceeded in {context}: {message}")]
    Capacity { context: String, message: String },

    #[error("cannot {action} `{path}`: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        source: nds_pressure::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Wraps a library error raised while working on `context` (a task label
    /// or config field). Library configuration and capacity errors keep
    /// their own exit status.
    pub fn core(context: impl Into<String>, source: nds_pressure::Error) -> Self {
        let context = context.into();
        match source {
            nds_pressure::Error::Config { field, message } => CliError::Config { field, message },
            nds_pressure::Error::Capacity(message) => CliError::Capacity { context, message },
            source => CliError::Core { context, source },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Capacity { .. } => 3,
            _ => 1,
        }
    }
}
