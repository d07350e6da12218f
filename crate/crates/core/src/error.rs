use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The dark port receives no light at all, so the postselected
    /// ensemble is empty and P_V is 0/0.
    #[error("degenerate dark port: {0}")]
    DegenerateDarkPort(String),

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("postselected ensemble is empty")]
    EmptyEnsemble,

    #[error("no detected photons")]
    EmptySample,

    #[error("residual did not fall below {tol:e} within {rounds} rounds")]
    NoConvergence { tol: f64, rounds: u64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
