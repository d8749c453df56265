use thiserror::Error;

use crate::framework::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {asymmetry:e}, tolerance {tolerance:e})")]
    SymmetryViolation { asymmetry: f64, tolerance: f64 },

    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    EigenFailure { sweeps: usize, off: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("evaluation produced a non-finite value: {0}")]
    Eval(String),

    #[error("invalid dimension: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("iterate became non-finite at iteration {iteration}")]
    Divergence {
        iteration: usize,
        partial: Box<Trajectory>,
    },

    #[error("state entry '{0}' has no declared transformation role")]
    Role(String),

    #[error("line search exhausted {backtracks} backtracks (smallest trial {smallest_trial:e})")]
    LineSearchFailure {
        backtracks: usize,
        smallest_trial: f64,
    },

    #[error("gradient difference vanished at the initialization pair (norm {0:e})")]
    StationaryStart(f64),

    #[error("invalid weight file: {0}")]
    Format(String),

    #[error("non-finite value in the unrolled loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged {
        epoch: usize,
        last_good: Box<crate::loa_model::ModelWeights>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
