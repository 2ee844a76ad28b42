use thiserror::Error;

/// Errors shared by all geometric and spectral operations.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("point is not interior to the body")]
    NotInterior,
    #[error("direction vector is zero")]
    DegenerateDirection,
    #[error("operation requires a regular (C^2, positive-definite) boundary")]
    NotRegular,
    #[error("projective image leaves the affine chart")]
    ChartOverflow,
    #[error("fiber angle map is non-monotone; broken convexity at this point")]
    IllConditionedFiber,
    #[error("inner radius must be strictly smaller than outer radius")]
    RadiusOrder,
    #[error("test-field Gram matrix is numerically singular")]
    RankDeficient,
    #[error("eigensolver failed: {0}")]
    SolverBreakdown(String),
    #[error("field is zero on the mesh")]
    ZeroFunction,
    #[error("cannot place the requested centers with the required separation")]
    PlacementInfeasible,
    #[error("epsilon must lie in (0, 1/2)")]
    EpsilonRange,
    #[error("sample point lies outside the inner ellipsoid")]
    OutsideInner,
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("operation not supported in dimension {0}")]
    Unsupported(usize),
    #[error("invalid body specification: {0}")]
    BadSpec(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
