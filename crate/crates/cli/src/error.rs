use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("empty post-selection: {0}")]
    EmptyPostSelection(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Numeric(nhqubit::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::EmptyPostSelection(_) => 3,
            CliError::NoConvergence(_) => 4,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<nhqubit::Error> for CliError {
    fn from(e: nhqubit::Error) -> Self {
        match e {
            nhqubit::Error::EmptyEnsemble => CliError::EmptyPostSelection(e.to_string()),
            nhqubit::Error::NoConvergence { .. } => CliError::NoConvergence(e.to_string()),
            nhqubit::Error::InvalidParameter { name, reason } => CliError::config(name, reason),
            other => CliError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
