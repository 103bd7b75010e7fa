use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid of size {size} cannot resolve a basis of order {order} (need at least {})", 4 * order)]
    Resolution { size: usize, order: usize },

    #[error("grid mismatch: {left} vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("operator kernel is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("degenerate spectrum: eigenvalue gap {gap:e} after index {index}")]
    DegenerateSpectrum { index: usize, gap: f64 },

    #[error("covariance {family} is not positive definite on the design (near-duplicate points {first} and {second})")]
    NotPositiveDefinite {
        family: String,
        first: usize,
        second: usize,
    },

    #[error("kriging system is singular after maximal jitter")]
    SingularSystem,

    #[error("invalid density: {0}")]
    Density(String),

    #[error("invalid design: {0}")]
    Design(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by user input (configs, parameters, files)
    /// rather than by a numerical breakdown.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Parameter(_)
            | Error::Density(_)
            | Error::Design(_)
            | Error::Config(_)
            | Error::Resolution { .. }
            | Error::GridMismatch { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
