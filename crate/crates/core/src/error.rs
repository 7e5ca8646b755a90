use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("exponent p = {p} outside the admissible window for N = {dim}")]
    PowerOutOfWindow { dim: usize, p: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shooting bracket not found in amplitude range [1, {0:e}]")]
    BracketNotFound(f64),
    #[error("ground-state residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("mass constraint violated: |u|_2 = {norm}, expected {rho}")]
    MassViolation { norm: f64, rho: f64 },
    #[error("zero field")]
    ZeroField,
    #[error("dilation |h| = {h} exceeds cap {cap}")]
    DilationCap { h: f64, cap: f64 },
    #[error("linking box exceeds grid capacity: {0}")]
    GridCapacity(String),
    #[error("autonomous case: V vanishes identically, the linking certificate is degenerate")]
    Autonomous,
    #[error("barycenter chain from h1 to h2 not found at threshold {0}")]
    NoChain(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
