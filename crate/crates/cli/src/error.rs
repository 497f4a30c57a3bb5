use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("acceptance flags failed: {0}")]
    FlagFailure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::FlagFailure(_) => 3,
        }
    }
}

impl From<neutral_decorr::error::Error> for CliError {
    fn from(e: neutral_decorr::error::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
