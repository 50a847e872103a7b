use std::io;

use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("operation requires dimension {expected}, got {actual}")]
    Dimension { expected: u32, actual: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ground-state iteration did not converge after {iterations} iterations (last update {last_update:e})")]
    ConvergenceFailure { iterations: usize, last_update: f64 },

    #[error("result is not resolved on the grid: {0}")]
    Resolution(String),

    #[error("numerical blow-up: non-finite samples at t = {t}")]
    NumericalBlowup { t: f64 },

    #[error("solver configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("{context}: {inner}")]
    Context { context: String, inner: Box<LabError> },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn context(self, context: impl Into<String>) -> Self {
        LabError::Context {
            context: context.into(),
            inner: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            LabError::ConvergenceFailure { .. }
            | LabError::NumericalBlowup { .. }
            | LabError::Resolution(_) => true,
            LabError::Context { inner, .. } => inner.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
