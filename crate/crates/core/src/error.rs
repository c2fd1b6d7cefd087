use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("derivative order exceeds degree (order {order}, degree {degree})")]
    DerivativeOrder { order: usize, degree: usize },

    #[error("invalid spline: {0}")]
    InvalidSpline(String),

    #[error("degenerate knot layout")]
    DegenerateKnots,

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("R-function derivative singular at corner")]
    RFunctionSingular,

    #[error("domain under-resolved: no interior cells")]
    NoInteriorCells,

    #[error("extension failed: inner index array not found (refine grid)")]
    ExtensionFailed,

    #[error("stiffness matrix singular (check boundary conditions)")]
    SingularStiffness,

    #[error("matrix is numerically singular (estimated rank deficiency {rank_deficiency})")]
    Singular { rank_deficiency: usize },

    #[error("loading produces no buckling (tension-dominated)")]
    NoBuckling,

    #[error("eigenproblem of size {n} exceeds the dense limit {limit}: use finer-grained tooling or coarser grid")]
    TooLarge { n: usize, limit: usize },

    #[error("eigensolver did not converge: {0}")]
    EigenNotConverged(String),

    #[error("vertex radii too large")]
    VertexRadiiTooLarge,

    #[error("degenerate vertex angle at vertex {0}")]
    DegenerateVertexAngle(usize),

    #[error("Airy formulation inapplicable: unbalanced boundary {boundary} (net force {force:.3e}, torque {torque:.3e})")]
    UnbalancedBoundary { boundary: usize, force: f64, torque: f64 },

    #[error("gauge constraints degenerate")]
    GaugeDegenerate,

    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),

    #[error("zero-length segment")]
    ZeroLengthSegment,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference run failed: {0}")]
    Reference(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
