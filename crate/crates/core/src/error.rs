use thiserror::Error;

/// Errors produced by model evaluation, integration, sampling and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model evaluation produced a non-finite value in {what} at q = {point:?}")]
    NonFinite { what: &'static str, point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate rank at q = {point:?}: expected {expected} positive eigenvalues, found {found} (eigenvalues {eigenvalues:?})")]
    DegenerateRank {
        point: Vec<f64>,
        expected: usize,
        found: usize,
        eigenvalues: Vec<f64>,
    },

    #[error(
        "integration failed at t = {time}: state is not finite or energy is no longer conserved"
    )]
    Integration { time: f64 },

    #[error("walk failed on leg {leg}: {source}")]
    Walk {
        leg: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("model spec error on line {line}: {message}")]
    Spec { line: usize, message: String },

    #[error("model validation failed at sample point {point:?}: {message}")]
    Validation { point: Vec<f64>, message: String },

    #[error("at least {required} samples are required, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("{failed} of {total} paths failed, above the failure budget; first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
