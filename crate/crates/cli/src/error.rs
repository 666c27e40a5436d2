use thiserror::Error;

/// Runner-level failures, split by the exit code they map to: 1 for
/// anything a corrected configuration would fix, 2 for runs that executed
/// but produced degenerate data.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Module(#[from] missmass_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use missmass_core::Error;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Module(e) => match e {
                Error::Parameter(_) | Error::Domain(_) | Error::UnsupportedFamily(_) => 1,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
