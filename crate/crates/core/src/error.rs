use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero step vector")]
    ZeroStep,

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cannot parse source spec `{spec}`: {reason}")]
    SourceSpec { spec: String, reason: String },

    #[error("cannot parse numeric expression `{0}`")]
    Expression(String),

    #[error("random-access directions are not available for `{0}`")]
    SequentialOnly(String),

    #[error("solver did not converge in {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("trajectory was not produced by the base-{expected} van der Corput system")]
    WrongSource { expected: u64 },

    #[error("trajectory never enters the unit ball at an odd index")]
    NeverEntersBall,

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
