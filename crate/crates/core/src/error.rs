use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("probability {value} lies outside [0, 1]; effect or state is invalid")]
    ProbabilityRange { value: f64 },

    #[error("{0} is not prime")]
    NotPrime(usize),

    #[error("search space of {size} candidates exceeds the enumeration guard {limit}; exhaustive search is infeasible")]
    GuardExceeded { size: f64, limit: f64 },

    #[error("linear program reported {0}")]
    Lp(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { what, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
