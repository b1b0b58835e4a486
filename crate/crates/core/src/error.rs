use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("impossible observation {obs} under action {action} (likelihood {likelihood:e})")]
    ImpossibleObservation {
        obs: usize,
        action: usize,
        likelihood: f64,
    },

    #[error("operation requires an action-independent transition matrix")]
    NotShared,

    #[error("matrix is singular")]
    Singular,

    #[error("linear solve residual {0:e} exceeds tolerance")]
    Residual(f64),

    #[error("matrix is not symmetric within tolerance (|a[{row}][{col}] - a[{col}][{row}]| = {gap:e})")]
    Asymmetric { row: usize, col: usize, gap: f64 },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("linear program failed numerically: {0}")]
    LpNumerical(String),

    #[error("alpha-vector set grew to {size} (cap {cap}); use the grid solver")]
    Capacity { size: usize, cap: usize },
}
