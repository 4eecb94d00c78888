use thiserror::Error;

use qpv_core::QpvError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] QpvError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub(crate) fn config(key: &str, line: usize, msg: &str) -> Self {
        if line == 0 {
            CliError::Config(format!("{key}: {msg}"))
        } else {
            CliError::Config(format!("{key} (line {line}): {msg}"))
        }
    }

    pub(crate) fn missing(key: &str) -> Self {
        CliError::Config(format!("{key}: missing required key"))
    }

    /// Process exit code: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(QpvError::Config(_)) => 2,
            _ => 3,
        }
    }
}
