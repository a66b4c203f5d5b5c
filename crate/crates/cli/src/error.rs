use thiserror::Error;

/// Failure of a CLI invocation, mapped onto a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected by the argument parser itself (also covers `--help`).
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{flag}: {message}")]
    Usage { flag: &'static str, message: String },
    #[error("{0}")]
    Io(String),
    #[error("computation failed: {0}")]
    Compute(#[from] fdcache_core::Error),
}

impl CliError {
    pub fn usage(flag: &'static str, message: impl Into<String>) -> Self {
        CliError::Usage {
            flag,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage { .. } => 2,
            CliError::Io(_) => 3,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
