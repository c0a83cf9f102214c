use thiserror::Error;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status when an evaluation fails numerically or output cannot be written.
pub const EXIT_NUMERICAL: i32 = 1;
/// Exit status for malformed flags, configs or baseline files.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: cvqkd_core::Error,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Numerical { .. } | Self::Io { .. } => EXIT_NUMERICAL,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
