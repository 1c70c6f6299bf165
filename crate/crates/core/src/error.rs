use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{context}: matrix is singular (smallest eigenvalue {eigenvalue:e}, threshold {threshold:e})")]
    Singular {
        context: &'static str,
        eigenvalue: f64,
        threshold: f64,
    },

    #[error("{context}: matrix is not positive definite")]
    NotPositiveDefinite { context: &'static str },

    #[error("unstable discretization: {bound} = {value} exceeds limit {limit}")]
    Unstable {
        bound: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no feasible fusion weights: every convex combination is singular")]
    Infeasible,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}
