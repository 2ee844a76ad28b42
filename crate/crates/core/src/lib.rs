//! Numerical toolkit for regular Hilbert geometries: the cross-ratio metric,
//! Finsler-Laplace fiber data (angle form, symbol, Holmes-Thompson density,
//! weight), P1 eigensolves on Hilbert balls and annuli, and the
//! osculating-ellipsoid machinery that makes these geometries asymptotically
//! Riemannian.
//!
//! Everything is organized around [`ConvexBody`], a properly convex open set
//! in a fixed affine chart together with its boundary oracles. Bodies are
//! immutable after construction and every operation is a pure function, so
//! unrestricted concurrent reads are safe.

pub mod asymptotics;
pub mod convex_body;
pub mod error;
pub mod hilbert_core;
pub mod laplace_kernel;
pub mod spectral;

pub use convex_body::{BodyKind, BoundaryHessian, BoundaryHit, ConvexBody};
pub use error::{GeomError, Result};

/// Chart points and tangent vectors. The third component is zero for
/// two-dimensional bodies; the logical dimension lives on the body.
pub type ChartPoint = nalgebra::Vector3<f64>;
pub type ChartVector = nalgebra::Vector3<f64>;
pub type Covector = nalgebra::Vector3<f64>;

/// Boundary residual tolerance for ray/boundary intersections. Distances
/// involve logs of boundary gaps, so this sits far below metric tolerances.
pub const TOL_BOUNDARY: f64 = 1e-12;

pub(crate) fn v2(x: f64, y: f64) -> ChartPoint {
    nalgebra::Vector3::new(x, y, 0.0)
}
