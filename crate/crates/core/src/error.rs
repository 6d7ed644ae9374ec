use thiserror::Error;

/// Errors raised by the laboratory. Every analytic operation either
/// succeeds with a certified answer or returns one of these.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// The input lies outside the operation's mathematical domain
    /// (zero polynomial, wrong degree, non-positive parameter, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition on the call itself failed (empty sample, bad range).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Exhaustive enumeration would exceed the configured budget.
    #[error("budget exceeded: {needed} candidates > budget {budget}; {advice}")]
    Budget {
        needed: u128,
        budget: u128,
        advice: String,
    },

    /// An iterative numerical routine did not reach its certification
    /// target within the iteration budget.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// A finite-scale classification could not decide.
    #[error("ambiguous: {0}")]
    Ambiguous(String),

    /// Rejection sampling accepted too few draws.
    #[error("acceptance rate {rate:.3e} below floor {floor:.3e}")]
    LowAcceptance { rate: f64, floor: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Parse(e.to_string())
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}
