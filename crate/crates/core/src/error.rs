use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dates must be strictly increasing: {previous} followed by {date} on line {line}")]
    Ordering {
        line: usize,
        previous: String,
        date: String,
    },

    #[error("cannot interpolate missing value at series boundary (index {index})")]
    Boundary { index: usize },

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {layer}: {message}")]
    Numeric { layer: &'static str, message: String },

    #[error("GARCH fit failed: {message} (best log-likelihood {best_loglik})")]
    Fit { message: String, best_loglik: f64 },

    #[error("non-stationary GARCH parameters: alpha1 + beta1 = {persistence}")]
    Nonstationary { persistence: f64 },

    #[error("innovation selection failed: {0}")]
    Selection(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training {
        epoch: usize,
        message: String,
        history: crate::nn::TrainHistory,
    },

    #[error("misaligned series: {0}")]
    Alignment(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient history for forecast on {date}")]
    InsufficientHistory { date: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("source not found: {}", .0.display())]
    SourceNotFound(PathBuf),

    #[error("missing artifact for {model}: {}", .path.display())]
    MissingArtifact { model: String, path: PathBuf },

    #[error("invalid artifact {}: {message}", .path.display())]
    InvalidArtifact { path: PathBuf, message: String },

    #[error("http error: {0}")]
    Http(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 I/O, 3 data validation,
    /// 4 numeric or training failure, 64 usage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_)
            | Error::SourceNotFound(_)
            | Error::MissingArtifact { .. }
            | Error::Http(_) => 2,
            Error::EmptyInput
            | Error::Parse { .. }
            | Error::Ordering { .. }
            | Error::Boundary { .. }
            | Error::InsufficientData { .. }
            | Error::Range(_)
            | Error::Alignment(_)
            | Error::InsufficientHistory { .. }
            | Error::Config(_)
            | Error::InvalidArtifact { .. }
            | Error::Json(_) => 3,
            Error::Domain(_)
            | Error::Shape(_)
            | Error::Numeric { .. }
            | Error::Fit { .. }
            | Error::Nonstationary { .. }
            | Error::Selection(_)
            | Error::Training { .. }
            | Error::UndefinedCorrelation(_) => 4,
            Error::Usage(_) => 64,
        }
    }
}
