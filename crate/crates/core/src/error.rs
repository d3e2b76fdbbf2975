use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("degenerate channel: {0}")]
    Degenerate(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("bounds not applicable: {0}")]
    NotApplicable(String),
    #[error("unsupported user count {0}: must be a power of two")]
    UnsupportedUsers(usize),
    #[error("interference nulling violated: leakage {leakage:e} exceeds {limit:e}")]
    Leakage { leakage: f64, limit: f64 },
    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
