use thiserror::Error;

/// Runner failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] splice_core::Error),
    #[error("missing artifact {path}: {hint}")]
    MissingArtifact { path: String, hint: String },
    #[error("output directory {0} is locked by another run (remove the lock file if it is stale)")]
    Locked(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use splice_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::Config(_) | E::State(_)) => EXIT_CONFIG,
            CliError::Core(E::NonFinite { .. } | E::Degenerate(_)) => EXIT_NUMERIC,
            CliError::Core(_) | CliError::MissingArtifact { .. } | CliError::Locked(_) | CliError::Io(_) => EXIT_IO,
        }
    }
}
