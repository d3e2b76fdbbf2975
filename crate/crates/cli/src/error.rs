use awgnbc_core::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Check(_) => 2,
            Self::Internal(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_)
            | Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::Configuration(_)
            | Error::NotApplicable(_)
            | Error::UnsupportedUsers(_)
            | Error::NotStochastic(_) => Self::Validation(e.to_string()),
            Error::Degenerate(_) | Error::Solver(_) | Error::Leakage { .. } => Self::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Internal(e.to_string())
    }
}
