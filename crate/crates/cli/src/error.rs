use thiserror::Error;

/// Failures reported by the command-line tool, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Filesystem or environment problem, including missing model files.
    #[error("{0}")]
    Environment(String),
    /// Malformed configuration, dataset or model contents.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Environment(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    pub fn env(msg: impl Into<String>) -> Self {
        CliError::Environment(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<clothslide::Error> for CliError {
    fn from(e: clothslide::Error) -> Self {
        match e {
            clothslide::Error::Io(_) | clothslide::Error::DatasetWrite { .. } => {
                CliError::Environment(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
