use thiserror::Error;

/// Errors raised by the analysis kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (size {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point coordinate {value} outside the support [-1, 1] (dimension {dim})")]
    OutsideSupport { dim: usize, value: f64 },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("concrete crushed at strain {strain:e} (limit {limit:e})")]
    Crushing { strain: f64, limit: f64 },

    #[error("steel ruptured at strain {strain:e} (ultimate {limit:e})")]
    Rupture { strain: f64, limit: f64 },

    #[error("tangent modulus singular: eta = {eta}, k = {k}")]
    SingularTangent { eta: f64, k: f64 },

    #[error("element {element}: nonpositive Jacobian determinant {det_j:e}")]
    SingularJacobian { element: usize, det_j: f64 },

    #[error("matrix not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("operator indefinite at CG iteration {iteration} (p'Ap = {curvature:e})")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("CG did not reach tolerance within {max_iter} iterations (relative residual {residual:e})")]
    MaxIterations { max_iter: usize, residual: f64 },

    #[error("no convergence in load increment {increment} (residual norm {residual:e})")]
    NoConvergence { increment: usize, residual: f64 },

    #[error("quadrature node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_node(node: usize, source: Error) -> Self {
        Error::AtNode {
            node,
            source: Box::new(source),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
