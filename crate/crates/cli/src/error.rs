use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Runtime(String),
    #[error("{0}")]
    Occupancy(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Occupancy(_) => 4,
            CliError::NoRoot(_) => 5,
        }
    }
}
