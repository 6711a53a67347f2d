use std::path::PathBuf;

use troop_core::ErrorKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] troop_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => EXIT_INPUT,
                ErrorKind::Pipeline => EXIT_PIPELINE,
                ErrorKind::Config => EXIT_CONFIG,
            },
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Output { .. } => EXIT_PIPELINE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
