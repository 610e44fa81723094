use thiserror::Error;

/// Errors raised across the survival toolkit.
#[derive(Debug, Error)]
pub enum SurvError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("partial likelihood is undefined: no uncensored samples")]
    UndefinedLoss,
    #[error("concordance index is undefined: no orderable pairs")]
    UndefinedMetric,
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("solver did not converge after {iterations} iterations (final change {final_change:e})")]
    NonConvergence { iterations: usize, final_change: f64 },
    #[error("optimization failed: all {0} trials failed")]
    OptimizationFailed(usize),
    #[error("synthetic data generation failed: {0}")]
    Generation(String),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SurvError {
    /// Errors that originate in the arithmetic rather than in the data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SurvError::Divergence { .. }
                | SurvError::Numerical(_)
                | SurvError::NonConvergence { .. }
                | SurvError::OptimizationFailed(_)
                | SurvError::UndefinedLoss
                | SurvError::UndefinedMetric
        )
    }
}

pub type Result<T> = std::result::Result<T, SurvError>;
