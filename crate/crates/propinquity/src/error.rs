use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or algebra mismatch between operands.
    #[error("structural error: {0}")]
    Structure(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A validation certificate failed (kernel, Leibniz, morphism, admissibility).
    #[error("certificate failure: {0}")]
    Certificate(String),

    /// An iterative solver did not reach its target within budget.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A requested computation exceeds the configured desk-scale limits.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Internal inconsistency, e.g. an LP that should be bounded is not.
    #[error("inconsistency: {0}")]
    Inconsistency(String),

    /// A registry lookup failed.
    #[error("lookup error: {0}")]
    Lookup(String),
}

pub type Result<T> = std::result::Result<T, Error>;
