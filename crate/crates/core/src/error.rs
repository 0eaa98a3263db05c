use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("the zero vector has no usable duality image here")]
    ZeroVector,
    #[error("the zero functional exposes no face")]
    ZeroFunctional,
    #[error("the functional does not attain its supremum, so the exposed face is empty")]
    EmptyFace,
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid vector: {0}")]
    InvalidVector(String),
    #[error("invalid tail rule: {0}")]
    InvalidTailRule(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),
    #[error("expression error at byte {pos}: {msg}")]
    Expression { pos: usize, msg: String },
    #[error("constraints are inconsistent (residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("epsilon not reached by truncation cap {n_max}; best gap {best_gap:.3e}, best distance {best_distance:.3e}")]
    BudgetExceeded {
        n_max: usize,
        best_gap: f64,
        best_distance: f64,
    },
    #[error("regularizer is not radial; use the admissibility checks for custom regularizers")]
    NonRadialRegularizer,
    #[error("Ekeland condition violated: {0}")]
    EkelandCheckFailed(String),
    #[error("extension norm {got:.12e} exceeds target {target:.12e}")]
    NormInflation { got: f64, target: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;
