use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    /// A hypothesis of the decay theorems (e.g. `beta > n - 1`) is violated.
    #[error("theorem hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("fixed-point iteration failed to contract over horizon {horizon}: {detail}")]
    Convergence { horizon: f64, detail: String },

    /// The time step fell below `dt_min` before the blowup threshold was reached.
    #[error("solver stalled at t = {t}: dt fell below dt_min with M = {m:e} below the blowup threshold")]
    Stalled { t: f64, m: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Stable short name used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::Validation(_) => "ValidationError",
            Error::UnsupportedDomain(_) => "UnsupportedDomainError",
            Error::Hypothesis(_) => "HypothesisViolation",
            Error::Convergence { .. } => "ConvergenceFailure",
            Error::Stalled { .. } => "SolverStalled",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "SerializationError",
            Error::Csv(_) => "CsvError",
        }
    }
}
