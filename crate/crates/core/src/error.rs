use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension n = {0} is below 2")]
    BadDimension(usize),
    #[error("log exponent a = {0} is not negative; theorem-grade runs need a < 0 (use an exploratory model)")]
    OutOfTheoremScope(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
    #[error("{what} saturated at argument {arg:e}")]
    Saturated { what: &'static str, arg: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature rule needs at least one node")]
    EmptyRule,
    #[error("Jacobi exponents must exceed -1 (got left = {left}, right = {right})")]
    BadExponent { left: f64, right: f64 },
    #[error("Gauss-Jacobi nodes did not converge (m = {m}, exponents {left}, {right})")]
    NodesDidNotConverge { m: usize, left: f64, right: f64 },
    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("gradient at the origin is ill-defined for a field with nonzero slope there")]
    OriginSingularity,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("non-finite value at s = {s} ({what})")]
    NonFinite { s: f64, what: String },
    #[error("step {ds:e} violates the stability limit {limit:e}")]
    Cfl { ds: f64, limit: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mass matrix is not positive definite at s = {0}")]
    Singular(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("record has no snapshot at s = {0} (unit cadence required)")]
    MissingSnapshot(f64),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("records do not overlap: {0}")]
    NoOverlap(String),
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}
