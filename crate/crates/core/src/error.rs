use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A Cholesky pivot was not positive.
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    /// Raised by a counting evaluator when a batch would overrun the budget.
    #[error("evaluation budget exhausted: {used} used, {requested} requested, budget {budget}")]
    BudgetExhausted {
        used: usize,
        requested: usize,
        budget: usize,
    },

    /// The updated covariance failed the SPD check. The state is left untouched.
    #[error("covariance degenerated at iteration {iteration}")]
    CovarianceDegenerate { iteration: usize },

    /// The generation was not sampled at the optimizer's current mean.
    #[error("generation was sampled at a different mean than the current state")]
    StaleGeneration,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
