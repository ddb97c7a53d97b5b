use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cvtele_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table: {0}")]
    Table(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_TOLERANCE: u8 = 2;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(cvtele_core::Error::GridMassDeficit { .. })
            | CliError::Core(cvtele_core::Error::NonFinite(_)) => EXIT_TOLERANCE,
            _ => EXIT_CONFIG,
        }
    }
}
