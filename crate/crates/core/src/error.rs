use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsdError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Hermitian eigensolver failed to converge on a {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("solver did not converge after {iterations} iterations (primal residual {primal:.3e}, dual residual {dual:.3e})")]
    Unconverged { iterations: usize, primal: f64, dual: f64 },

    #[error("problem detected infeasible after {iterations} iterations (primal residual {primal:.3e})")]
    Infeasible { iterations: usize, primal: f64 },

    #[error("decoded POVM not complete: ||sum - I||_F = {0:.3e} exceeds 1e-3")]
    IncompletePovm(f64),
}

pub type Result<T> = std::result::Result<T, QsdError>;
