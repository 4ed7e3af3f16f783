use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "sampler exhausted {iterations} iterations (estimated acceptance rate {acceptance_rate:.3e}): {what}"
    )]
    ResourceExhausted {
        what: String,
        iterations: u64,
        acceptance_rate: f64,
    },

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    #[error("step response thresholds not reached within horizon {horizon} s")]
    HorizonTooShort { horizon: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
