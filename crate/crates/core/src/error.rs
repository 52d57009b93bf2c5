use thiserror::Error;

/// Errors raised across assembly, solves and quadrature.
#[derive(Debug, Error)]
pub enum Error {
    #[error("slice decomposition is undefined for the zero quaternion")]
    ZeroQuaternion,
    #[error("quaternion {0} lies on the excluded half line (-inf, 0]")]
    BranchCut(String),
    #[error("matrix lacks the complex-adjoint block symmetry (deviation {0:e})")]
    NotComplexAdjoint(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("non-finite value at node {node} (i={i}, j={j}, k={k})")]
    NonFinite { node: usize, i: usize, j: usize, k: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("singular Robin-type closure at node {node}: sum of a_l^2 n_l vanishes on axis {axis}")]
    SingularClosure { node: usize, axis: usize },
    #[error("singular matrix")]
    Singular,
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ill-conditioned oracle eigendecomposition (condition number {0:e})")]
    IllConditioned(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
