use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid RSB parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("log-sum-exp overflow at level {level} (non-finite intermediate value)")]
    QuadratureOverflow { level: usize },

    #[error("system size N={n} exceeds the enumeration cap {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("coupling tensors need {entries} entries, above the budget of {budget}")]
    MemoryBudget { entries: u128, budget: u128 },

    #[error("spin configuration has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance factorisation failed: smallest eigenvalue {min_eigenvalue:e} below -{jitter:e}")]
    Factorization { min_eigenvalue: f64, jitter: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}
