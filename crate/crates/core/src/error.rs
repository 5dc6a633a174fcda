use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("empty operator (dimension 0)")]
    Empty,
    #[error("eigendecomposition did not meet tolerance (residual {residual:e})")]
    ConvergenceFailure { residual: f64 },
    #[error("function `{function}` is undefined or non-finite at {at}")]
    DomainError { function: String, at: f64 },
    #[error("degenerate pair: ||B - A||_1 = {norm:e} is below {threshold:e}")]
    DegeneratePair { norm: f64, threshold: f64 },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("bad parameters for `{function}`: {reason}")]
    BadParams { function: String, reason: String },
    #[error("bad interval [{a}, {b}] with {n} points")]
    BadInterval { a: f64, b: f64, n: usize },
    #[error("segment refinement reached n = {n_max} without increments below 1")]
    RefinementOverflow { n_max: u64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("degenerate increment: f(t_{k}) = f(s_{k})")]
    DegenerateIncrement { k: usize },
    #[error("invariant violated at k = {k}: {reason}")]
    InvariantViolation { k: usize, reason: String },
    #[error("index {index} out of range (len {len})")]
    IndexError { index: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
