use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: line {line}: {reason}")]
    ConfigLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: {reason}")]
    Config { path: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] wpcs_core::Error),
}

impl CliError {
    /// 1 for anything the user can fix in the invocation or config, 2 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::ConfigLine { .. } | CliError::Config { .. } => 1,
            CliError::Io { .. } | CliError::Sim(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
