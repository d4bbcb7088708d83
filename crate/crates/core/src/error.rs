use thiserror::Error;

/// Errors raised by measure construction, exact computations and samplers.
#[derive(Debug, Error)]
pub enum SieveError {
    #[error("invalid measure descriptor `{text}`: {reason}")]
    Descriptor { text: String, reason: String },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("{what} = {n} exceeds the exact-mode cap {cap}")]
    CapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {err:e})")]
    Quadrature { tol: f64, err: f64 },

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("empty composition")]
    EmptyComposition,

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SieveError>;
