use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum MomError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bad prime {0}: local factor must come from the conductor")]
    BadPrime(u64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl MomError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            MomError::InvalidParameter(_) | MomError::Unsupported(_) | MomError::BadPrime(_) => 1,
            MomError::Numeric(_) | MomError::Io(_) => 2,
            MomError::Convergence(_) => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            MomError::InvalidParameter(_) => "invalid_parameter",
            MomError::Numeric(_) => "numeric_failure",
            MomError::Convergence(_) => "convergence_failure",
            MomError::Unsupported(_) => "unsupported",
            MomError::BadPrime(_) => "bad_prime",
            MomError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, MomError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(MomError::InvalidParameter(msg.into()))
}
