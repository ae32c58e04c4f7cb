use thiserror::Error;

/// Errors produced by the estimator, the theory machinery and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The structural gradient is undefined (u_L = 0 with beta < 1).
    #[error("singular gradient: {0}")]
    SingularGradient(String),

    /// A clause of the (H1) hypothesis failed; the message names the clause.
    #[error("hypothesis (H1) violated: {0}")]
    HypothesisViolated(String),

    #[error("outside validity region: {0}")]
    OutsideValidityRegion(String),

    #[error("invalid epsilon: {0}")]
    InvalidEpsilon(String),

    #[error("invalid report: {0}")]
    InvalidReport(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::Schema(_)
            | Error::HypothesisViolated(_)
            | Error::OutsideValidityRegion(_)
            | Error::InvalidEpsilon(_)
            | Error::InvalidReport(_)
            | Error::Io(_)
            | Error::Csv(_) => 2,
            Error::NumericFailure(_) | Error::SingularGradient(_) => 3,
            Error::Capacity(_) => 4,
        }
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
