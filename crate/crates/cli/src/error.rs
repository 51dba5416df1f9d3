use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A check or tolerance failed; the output was still written.
    #[error("{0}")]
    Verification(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Model(#[from] subwalk_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 verification failure, 2 usage error, 3 runtime or model error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Model(_) | CliError::Io { .. } => 3,
        }
    }
}
