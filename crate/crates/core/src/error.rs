use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{algorithm} does not support a {operator} operator")]
    UnsupportedOperator {
        algorithm: &'static str,
        operator: &'static str,
    },

    #[error("non-finite value at iteration {iteration}, step `{step}`")]
    NonFinite {
        iteration: usize,
        step: &'static str,
    },

    #[error("non-finite observation passed to the denoiser")]
    NonFiniteObservation,

    #[error("quadrature did not reach tolerance (estimated error {error:.3e} over {intervals} intervals)")]
    Quadrature { error: f64, intervals: usize },

    #[error("state evolution failed at iteration {iteration}: {source}")]
    StateEvolution {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fixed-point equation has a negative discriminant ({0:.3e})")]
    NegativeDiscriminant(f64),

    #[error("{failed} of {trials} trials failed, above the 1% threshold; first failure: {first}")]
    TooManyFailures {
        failed: usize,
        trials: usize,
        first: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
