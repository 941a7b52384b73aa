use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("marked edge set is empty")]
    EmptyMarking,
    #[error("edge index {0} out of range")]
    InvalidEdge(usize),
    #[error("refinement closure did not terminate within {0} passes")]
    ClosureDiverged(usize),
    #[error("edge {0} lies on the boundary")]
    BoundaryEdge(usize),
    #[error("polynomial degree {0} exceeds the supported maximum {1}")]
    DegreeOverflow(usize, usize),
    #[error("factorisation failed: {0}")]
    Factorization(String),
    #[error("singular pivot at index {0}")]
    SingularPivot(usize),
    #[error("iterative linear solver stalled: relative residual {0:e} after {1} iterations")]
    LinearSolverStalled(f64, usize),
    #[error("eigensolver did not converge after {iterations} operator applications; Ritz history {history:?}")]
    EigenNotConverged { iterations: usize, history: Vec<f64> },
    #[error("matrix is not positive definite")]
    NotSpd,
    #[error("eigenvalue {0:e} is negative beyond round-off")]
    Indefinite(f64),
    #[error("Newton iteration failed; residual history {0:?}")]
    NewtonFailed(Vec<f64>),
    #[error("evaluation at {0:?} is too close to the singular corner")]
    SingularPoint([f64; 2]),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("certificate invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
