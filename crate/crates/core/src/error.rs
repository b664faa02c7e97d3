use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter record violated one of its construction invariants.
    #[error("invalid {record}: {reason}")]
    InvalidParameter { record: &'static str, reason: String },

    #[error("frequency must be positive, got {0} rad/s")]
    NonPositiveFrequency(f64),

    #[error("gain correction denominator {0} is not positive")]
    GainCorrectionDomain(f64),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("singular linear system at omega = {omega} rad/s")]
    SingularSystem { omega: f64 },

    #[error("unstable integration: {0}")]
    UnstableIntegration(String),

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:.6e})")]
    FitDidNotConverge {
        iterations: usize,
        residual_norm: f64,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("calibration inconsistency: {0}")]
    Calibration(String),

    #[error("config error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(record: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            record,
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
