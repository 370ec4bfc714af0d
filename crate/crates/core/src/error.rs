use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("radius {r} outside the computational domain [0, {outer}]")]
    OutOfDomain { r: f64, outer: f64 },

    #[error("grid too coarse: {cells} cells, need at least {min}")]
    GridTooCoarse { cells: usize, min: usize },

    #[error("field/grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("non-positive value {value} at node {node}")]
    NonPositive { node: usize, value: f64 },

    #[error("empty region")]
    EmptyRegion,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular Jacobian (zero pivot at row {0})")]
    SingularJacobian(usize),

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("line search stalled at iteration {iteration} (residual {residual:e}): positivity or descent unrecoverable")]
    LineSearch { iteration: usize, residual: f64 },

    #[error("continuation step underflow at amplitude fraction {0}")]
    RampUnderflow(f64),

    #[error("no admissible constant: {0}")]
    Infeasible(String),
}
