use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The innovation covariance of an update could not be factorized.
    #[error("singular innovation covariance at step {step} (condition number {condition:e})")]
    SingularInnovation { step: usize, condition: f64 },

    #[error("non-finite log-likelihood at initial guess {guess}")]
    NonFiniteInitial { guess: String },

    #[error(
        "calibration failed: no restart converged (best log-likelihood {best_loglik}, \
         {iterations} iterations, restart {restart})"
    )]
    NotConverged {
        best_loglik: f64,
        iterations: usize,
        restart: usize,
    },

    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("{0}")]
    NoData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::InvalidInput(_) => "invalid_input",
            Error::SingularInnovation { .. } => "singular_innovation",
            Error::NonFiniteInitial { .. } => "non_finite_initial",
            Error::NotConverged { .. } => "not_converged",
            Error::Csv { .. } => "csv",
            Error::NoData(_) => "no_data",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
