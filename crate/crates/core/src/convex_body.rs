//! Properly convex bodies in an affine chart and their boundary oracles.
//!
//! A body is represented by a convex level function `g` with `g < 0` inside,
//! `g = 0` on the boundary. Four kinds are supported: ellipsoids (closed-form
//! rays), log-sum-exp smoothed polytopes (C^infinity, strictly convex),
//! exact simplices (non-regular; metric and volume operations only) and
//! opaque level-set bodies produced by projective maps.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::{ChartPoint, ChartVector, TOL_BOUNDARY};

/// Affine facet functional `l(x) = a . x + b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Facet {
    pub a: [f64; 3],
    pub b: f64,
}

impl Facet {
    fn eval(&self, x: &ChartPoint) -> f64 {
        self.a[0] * x.x + self.a[1] * x.y + self.a[2] * x.z + self.b
    }
    fn grad(&self) -> ChartVector {
        Vector3::new(self.a[0], self.a[1], self.a[2])
    }
}

type LevelFn = Arc<dyn Fn(&ChartPoint) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum BodyKind {
    /// `(x-c)^T Q (x-c) <= 1` with `Q` symmetric positive definite.
    Ellipsoid { center: ChartPoint, shape: Matrix3<f64> },
    /// `(1/beta) log sum_i exp(beta l_i(x)) <= level`.
    LsePolytope { facets: Vec<Facet>, beta: f64, level: f64 },
    /// Simplex spanned by `dim + 1` vertices; boundary is not C^1.
    ExactSimplex {
        vertices: Vec<ChartPoint>,
        /// Precomputed affine barycentric forms `b_i(x) = a_i . x + c_i`.
        bary: Vec<Facet>,
    },
    /// Opaque convex level function, `f < 0` inside.
    LevelSet { f: LevelFn },
}

impl fmt::Debug for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyKind::Ellipsoid { center, .. } => write!(f, "Ellipsoid(center={:?})", center),
            BodyKind::LsePolytope { facets, beta, .. } => {
                write!(f, "LsePolytope({} facets, beta={})", facets.len(), beta)
            }
            BodyKind::ExactSimplex { vertices, .. } => {
                write!(f, "ExactSimplex({} vertices)", vertices.len())
            }
            BodyKind::LevelSet { .. } => write!(f, "LevelSet"),
        }
    }
}

/// Forward/backward boundary hits of the line `x + R u`.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryHit {
    pub t_plus: f64,
    pub t_minus: f64,
    pub p_plus: ChartPoint,
    pub p_minus: ChartPoint,
}

/// Second fundamental form of the boundary at `base`, on an orthonormal
/// tangent frame, with respect to the chart Euclidean metric.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryHessian {
    pub base: ChartPoint,
    pub normal: ChartVector,
    /// `(dim-1) x (dim-1)` block; only the leading block is meaningful.
    pub form: Matrix2<f64>,
    pub size: usize,
}

/// A properly convex open body in a fixed affine chart. Immutable after
/// construction; all oracles are pure.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: usize,
    kind: BodyKind,
    regular: bool,
    base: ChartPoint,
    name: String,
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }
    pub fn regular(&self) -> bool {
        self.regular
    }
    /// Interior base point fixed at construction.
    pub fn base(&self) -> ChartPoint {
        self.base
    }
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ellipsoid(dim: usize, center: ChartPoint, shape: Matrix3<f64>) -> Result<Self> {
        check_dim(dim)?;
        let mut q = shape;
        if dim == 2 {
            // pad the unused axis so level evaluation ignores it
            q[(2, 2)] = 1.0;
            q[(0, 2)] = 0.0;
            q[(2, 0)] = 0.0;
            q[(1, 2)] = 0.0;
            q[(2, 1)] = 0.0;
        }
        let sym = q.symmetric_eigen();
        if sym.eigenvalues.iter().any(|&e| e <= 0.0) {
            return Err(GeomError::BadSpec("ellipsoid shape matrix not positive definite".into()));
        }
        Ok(ConvexBody {
            dim,
            kind: BodyKind::Ellipsoid { center, shape: q },
            regular: true,
            base: center,
            name: "ellipsoid".into(),
        })
    }

    pub fn lse_polytope(dim: usize, facets: Vec<Facet>, beta: f64, level: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(beta > 0.0) || facets.len() < dim + 1 {
            return Err(GeomError::BadSpec("lse_polytope needs beta > 0 and >= dim+1 facets".into()));
        }
        let kind = BodyKind::LsePolytope { facets, beta, level };
        let mut body = ConvexBody {
            dim,
            kind,
            regular: true,
            base: Vector3::zeros(),
            name: "lse_polytope".into(),
        };
        body.base = body.find_interior_point()?;
        if dim == 2 {
            body.assert_regular_boundary()?;
        }
        Ok(body)
    }

    pub fn exact_simplex(dim: usize, vertices: Vec<ChartPoint>) -> Result<Self> {
        check_dim(dim)?;
        if vertices.len() != dim + 1 {
            return Err(GeomError::BadSpec("simplex needs dim + 1 vertices".into()));
        }
        let bary = barycentric_forms(dim, &vertices)?;
        let base = vertices.iter().sum::<Vector3<f64>>() / (vertices.len() as f64);
        Ok(ConvexBody {
            dim,
            kind: BodyKind::ExactSimplex { vertices, bary },
            regular: false,
            base,
            name: "exact_simplex".into(),
        })
    }

    fn level_set(dim: usize, f: LevelFn, regular: bool, base: ChartPoint, name: String) -> Self {
        ConvexBody { dim, kind: BodyKind::LevelSet { f }, regular, base, name }
    }

    /// Convex level function: negative inside, zero on the boundary.
    pub fn level(&self, x: &ChartPoint) -> f64 {
        match &self.kind {
            BodyKind::Ellipsoid { center, shape } => {
                let d = x - center;
                (d.transpose() * shape * d)[(0, 0)] - 1.0
            }
            BodyKind::LsePolytope { facets, beta, level } => {
                let mut m = f64::NEG_INFINITY;
                for f in facets {
                    m = m.max(f.eval(x));
                }
                let mut s = 0.0;
                for f in facets {
                    s += ((f.eval(x) - m) * beta).exp();
                }
                m + s.ln() / beta - level
            }
            BodyKind::ExactSimplex { bary, .. } => {
                let mut worst = f64::INFINITY;
                for b in bary {
                    worst = worst.min(b.eval(x));
                }
                -worst
            }
            BodyKind::LevelSet { f } => f(x),
        }
    }

    /// Gradient of the level function (finite differences for opaque bodies).
    pub fn level_grad(&self, x: &ChartPoint) -> ChartVector {
        match &self.kind {
            BodyKind::Ellipsoid { center, shape } => 2.0 * shape * (x - center),
            BodyKind::LsePolytope { facets, beta, level: _ } => {
                let w = softmax_weights(facets, *beta, x);
                let mut g = Vector3::zeros();
                for (f, wi) in facets.iter().zip(w.iter()) {
                    g += *wi * f.grad();
                }
                g
            }
            BodyKind::ExactSimplex { .. } | BodyKind::LevelSet { .. } => {
                let h = 1e-6;
                let mut g = Vector3::zeros();
                for i in 0..self.dim {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[i] += h;
                    xm[i] -= h;
                    g[i] = (self.level(&xp) - self.level(&xm)) / (2.0 * h);
                }
                g
            }
        }
    }

    /// Hessian of the level function.
    pub fn level_hess(&self, x: &ChartPoint) -> Result<Matrix3<f64>> {
        match &self.kind {
            BodyKind::Ellipsoid { shape, .. } => Ok(2.0 * shape),
            BodyKind::LsePolytope { facets, beta, .. } => {
                // covariance form: identical to beta (sum w a a^T - g g^T)
                // but positive semidefinite by construction, avoiding the
                // catastrophic cancellation that form suffers at large beta
                let w = softmax_weights(facets, *beta, x);
                let mut g = Vector3::zeros();
                for (f, wi) in facets.iter().zip(w.iter()) {
                    g += *wi * f.grad();
                }
                let mut s = Matrix3::zeros();
                for (f, wi) in facets.iter().zip(w.iter()) {
                    let d = f.grad() - g;
                    s += *wi * d * d.transpose();
                }
                Ok(*beta * s)
            }
            BodyKind::ExactSimplex { .. } => Err(GeomError::NotRegular),
            BodyKind::LevelSet { .. } => {
                let h = 1e-4;
                let mut m = Matrix3::zeros();
                let f0 = self.level(x);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        if i == j {
                            let mut xp = *x;
                            let mut xm = *x;
                            xp[i] += h;
                            xm[i] -= h;
                            m[(i, i)] = (self.level(&xp) - 2.0 * f0 + self.level(&xm)) / (h * h);
                        } else if i < j {
                            let mut pp = *x;
                            let mut pm = *x;
                            let mut mp = *x;
                            let mut mm = *x;
                            pp[i] += h;
                            pp[j] += h;
                            pm[i] += h;
                            pm[j] -= h;
                            mp[i] -= h;
                            mp[j] += h;
                            mm[i] -= h;
                            mm[j] -= h;
                            let v = (self.level(&pp) - self.level(&pm) - self.level(&mp)
                                + self.level(&mm))
                                / (4.0 * h * h);
                            m[(i, j)] = v;
                            m[(j, i)] = v;
                        }
                    }
                }
                Ok(m)
            }
        }
    }

    /// True iff `x` is strictly interior.
    pub fn contains(&self, x: &ChartPoint) -> bool {
        self.level(x) < 0.0
    }

    /// Boundary hits of the line `x + R u` in both directions.
    pub fn ray_boundary(&self, x: &ChartPoint, u: &ChartVector) -> Result<BoundaryHit> {
        if !self.contains(x) {
            return Err(GeomError::NotInterior);
        }
        let nu = u.norm();
        if nu == 0.0 || !nu.is_finite() {
            return Err(GeomError::DegenerateDirection);
        }
        let t_plus = self.ray_exit(x, u)?;
        let t_minus = self.ray_exit(x, &(-u))?;
        Ok(BoundaryHit {
            t_plus,
            t_minus,
            p_plus: x + t_plus * u,
            p_minus: x - t_minus * u,
        })
    }

    /// Exit parameter `t > 0` with `x + t u` on the boundary.
    fn ray_exit(&self, x: &ChartPoint, u: &ChartVector) -> Result<f64> {
        match &self.kind {
            BodyKind::Ellipsoid { center, shape } => {
                let d = x - center;
                let a = (u.transpose() * shape * u)[(0, 0)];
                let b = (d.transpose() * shape * u)[(0, 0)];
                let c = (d.transpose() * shape * d)[(0, 0)] - 1.0;
                let disc = b * b - a * c;
                if disc <= 0.0 || a <= 0.0 {
                    return Err(GeomError::DegenerateDirection);
                }
                let sq = disc.sqrt();
                // larger-magnitude root first avoids cancellation near the boundary
                let t = if b <= 0.0 { (-b + sq) / a } else { (c / a) / ((-b - sq) / a) };
                Ok(t)
            }
            BodyKind::ExactSimplex { bary, .. } => {
                let mut t = f64::INFINITY;
                for f in bary {
                    let slope = f.grad().dot(u);
                    if slope < 0.0 {
                        t = t.min(-f.eval(x) / slope);
                    }
                }
                if !t.is_finite() {
                    return Err(GeomError::DegenerateDirection);
                }
                Ok(t)
            }
            _ => self.ray_exit_rootfind(x, u),
        }
    }

    /// Bracketed Newton-bisection on the convex level function along the ray.
    fn ray_exit_rootfind(&self, x: &ChartPoint, u: &ChartVector) -> Result<f64> {
        let g = |s: f64| self.level(&(x + s * u));
        // bracket: along a ray from an interior point of a bounded convex body,
        // g is eventually positive and increasing
        let mut hi = 1.0 / u.norm();
        let mut lo = 0.0;
        let mut iters = 0;
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            iters += 1;
            if iters > 200 {
                return Err(GeomError::DegenerateDirection);
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gs = g(s);
            if gs < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            if gs.abs() <= TOL_BOUNDARY * 0.1 {
                return Ok(s);
            }
            let dg = self.level_grad(&(x + s * u)).dot(u);
            let mut next = if dg > 0.0 { s - gs / dg } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (hi - lo) <= f64::EPSILON * hi.max(1.0) {
                return Ok(0.5 * (lo + hi));
            }
            s = next;
        }
        Ok(s)
    }

    /// Second fundamental form of the boundary at `p`, via implicit
    /// differentiation of the level function.
    pub fn boundary_hessian(&self, p: &ChartPoint) -> Result<BoundaryHessian> {
        if !self.regular {
            return Err(GeomError::NotRegular);
        }
        let lv = self.level(p);
        if lv.abs() > 1e-8 {
            return Err(GeomError::DegenerateConfiguration(format!(
                "point not on the boundary (level = {lv:.3e})"
            )));
        }
        let grad = self.level_grad(p);
        let gn = grad.norm();
        if gn == 0.0 {
            return Err(GeomError::DegenerateConfiguration("vanishing boundary gradient".into()));
        }
        let normal = grad / gn;
        let hess = self.level_hess(p)?;
        let mut form = Matrix2::zeros();
        let frame = tangent_frame(self.dim, &normal);
        for (i, ti) in frame.iter().enumerate() {
            for (j, tj) in frame.iter().enumerate() {
                form[(i, j)] = (ti.transpose() * hess * tj)[(0, 0)] / gn;
            }
        }
        Ok(BoundaryHessian { base: *p, normal, form, size: self.dim - 1 })
    }

    /// Image body under the homogeneous projective map `T` (dimension 2 only).
    /// Ellipsoids and affine images of polytopes keep their analytic kind;
    /// everything else becomes a level-set body.
    pub fn projective_map(&self, t: &Matrix3<f64>) -> Result<ConvexBody> {
        if self.dim != 2 {
            return Err(GeomError::Unsupported(self.dim));
        }
        let tinv = t.try_inverse().ok_or(GeomError::ChartOverflow)?;
        // boundedness audit on boundary samples
        let w_base = hom_w(t, &self.base);
        if w_base.abs() < 1e-12 {
            return Err(GeomError::ChartOverflow);
        }
        for p in self.boundary_samples(360)? {
            let w = hom_w(t, &p);
            if w * w_base <= 1e-12 * w_base.abs() {
                return Err(GeomError::ChartOverflow);
            }
            let img = apply_hom(t, &p).ok_or(GeomError::ChartOverflow)?;
            if img.norm() > 1e8 {
                return Err(GeomError::ChartOverflow);
            }
        }
        let base_img = apply_hom(t, &self.base).ok_or(GeomError::ChartOverflow)?;
        let affine = t[(2, 0)].abs() <= 1e-14 * t.norm() && t[(2, 1)].abs() <= 1e-14 * t.norm();
        let mapped = match (&self.kind, affine) {
            (BodyKind::Ellipsoid { center, shape }, _) => {
                let (c2, q2) = map_conic(center, shape, &tinv)?;
                let mut body = ConvexBody::ellipsoid(2, c2, q2)?;
                body.base = base_img;
                body
            }
            (BodyKind::ExactSimplex { vertices, .. }, true) => {
                let vs = vertices
                    .iter()
                    .map(|v| apply_hom(t, v).ok_or(GeomError::ChartOverflow))
                    .collect::<Result<Vec<_>>>()?;
                ConvexBody::exact_simplex(2, vs)?
            }
            (BodyKind::LsePolytope { facets, beta, level }, true) => {
                let s = t[(2, 2)];
                let a2 = Matrix2::new(t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]) / s;
                let b2 = nalgebra::Vector2::new(t[(0, 2)], t[(1, 2)]) / s;
                let ainv = a2.try_inverse().ok_or(GeomError::ChartOverflow)?;
                let fac = facets
                    .iter()
                    .map(|f| {
                        let a = nalgebra::Vector2::new(f.a[0], f.a[1]);
                        let ap = ainv.transpose() * a;
                        Facet { a: [ap.x, ap.y, 0.0], b: f.b - ap.dot(&b2) }
                    })
                    .collect();
                let mut body = ConvexBody::lse_polytope(2, fac, *beta, *level)?;
                body.base = base_img;
                body
            }
            _ => {
                let src = self.clone();
                let f: LevelFn = Arc::new(move |y: &ChartPoint| match apply_hom(&tinv, y) {
                    Some(x) if hom_w(&tinv, y) * 1.0 > 0.0 => src.level(&x),
                    _ => 1.0,
                });
                ConvexBody::level_set(2, f, self.regular, base_img, format!("{}_mapped", self.name))
            }
        };
        if !mapped.contains(&mapped.base()) {
            return Err(GeomError::ChartOverflow);
        }
        Ok(mapped)
    }

    /// Boundary points seen from the base point along `m` uniform chart angles.
    pub fn boundary_samples(&self, m: usize) -> Result<Vec<ChartPoint>> {
        if self.dim != 2 {
            return Err(GeomError::Unsupported(self.dim));
        }
        (0..m)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
                let u = Vector3::new(th.cos(), th.sin(), 0.0);
                Ok(self.ray_boundary(&self.base, &u)?.p_plus)
            })
            .collect()
    }

    fn find_interior_point(&self) -> Result<ChartPoint> {
        let mut x = Vector3::zeros();
        for _ in 0..500 {
            if self.level(&x) < -1e-3 {
                return Ok(x);
            }
            let g = self.level_grad(&x);
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            x -= (0.1 / gn) * g;
        }
        if self.contains(&x) {
            Ok(x)
        } else {
            Err(GeomError::BadSpec("could not locate an interior point".into()))
        }
    }

    fn assert_regular_boundary(&self) -> Result<()> {
        for p in self.boundary_samples(360)? {
            let h = self.boundary_hessian(&p)?;
            if h.form[(0, 0)] <= 0.0 {
                return Err(GeomError::BadSpec("boundary Hessian not positive definite".into()));
            }
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(GeomError::Unsupported(dim))
    }
}

fn softmax_weights(facets: &[Facet], beta: f64, x: &ChartPoint) -> Vec<f64> {
    let vals: Vec<f64> = facets.iter().map(|f| f.eval(x)).collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = vals.iter().map(|v| ((v - m) * beta).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Orthonormal tangent frame completing the unit normal.
fn tangent_frame(dim: usize, normal: &ChartVector) -> Vec<ChartVector> {
    if dim == 2 {
        vec![Vector3::new(-normal.y, normal.x, 0.0)]
    } else {
        let seed = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let t1 = (seed - normal.dot(&seed) * normal).normalize();
        let t2 = normal.cross(&t1);
        vec![t1, t2]
    }
}

fn barycentric_forms(dim: usize, vertices: &[ChartPoint]) -> Result<Vec<Facet>> {
    // solve V^T w_i = e_i on homogeneous coordinates
    let n = dim + 1;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for (j, v) in vertices.iter().enumerate() {
        for i in 0..dim {
            m[(i, j)] = v[i];
        }
        m[(dim, j)] = 1.0;
    }
    let lu = m.transpose().lu();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = nalgebra::DVector::<f64>::zeros(n);
        e[i] = 1.0;
        let w = lu
            .solve(&e.clone())
            .ok_or_else(|| GeomError::BadSpec("degenerate simplex vertices".into()))?;
        // b_i(x) = sum_j w_j x_j + w_dim; derived from V^T w = e_i transposed
        let mut a = [0.0; 3];
        for k in 0..dim {
            a[k] = w[k];
        }
        out.push(Facet { a, b: w[dim] });
        let _ = e;
    }
    // self-check: b_i(v_j) = delta_ij
    for (i, f) in out.iter().enumerate() {
        for (j, v) in vertices.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            if (f.eval(v) - want).abs() > 1e-9 {
                return Err(GeomError::BadSpec("barycentric forms failed self-check".into()));
            }
        }
    }
    Ok(out)
}

fn hom_w(t: &Matrix3<f64>, p: &ChartPoint) -> f64 {
    t[(2, 0)] * p.x + t[(2, 1)] * p.y + t[(2, 2)]
}

fn apply_hom(t: &Matrix3<f64>, p: &ChartPoint) -> Option<ChartPoint> {
    let h = t * Vector3::new(p.x, p.y, 1.0);
    if h.z.abs() < 1e-300 {
        return None;
    }
    let q = Vector3::new(h.x / h.z, h.y / h.z, 0.0);
    if q.x.is_finite() && q.y.is_finite() {
        Some(q)
    } else {
        None
    }
}

/// Image of the ellipse `(x-c)^T Q (x-c) = 1` under the projective map with
/// inverse `tinv`, as a center/shape pair. Fails if the image is unbounded.
fn map_conic(
    center: &ChartPoint,
    shape: &Matrix3<f64>,
    tinv: &Matrix3<f64>,
) -> Result<(ChartPoint, Matrix3<f64>)> {
    let q2 = Matrix2::new(shape[(0, 0)], shape[(0, 1)], shape[(1, 0)], shape[(1, 1)]);
    let c2 = nalgebra::Vector2::new(center.x, center.y);
    let qc = q2 * c2;
    let mut qh = Matrix3::zeros();
    for i in 0..2 {
        for j in 0..2 {
            qh[(i, j)] = q2[(i, j)];
        }
        qh[(i, 2)] = -qc[i];
        qh[(2, i)] = -qc[i];
    }
    qh[(2, 2)] = c2.dot(&qc) - 1.0;
    let mut m = tinv.transpose() * qh * tinv;
    let a2 = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let det = a2.determinant();
    if det <= 0.0 {
        return Err(GeomError::ChartOverflow);
    }
    if a2[(0, 0)] + a2[(1, 1)] < 0.0 {
        m = -m;
    }
    let a2 = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let mv = nalgebra::Vector2::new(m[(0, 2)], m[(1, 2)]);
    let cnew = -a2.try_inverse().ok_or(GeomError::ChartOverflow)? * mv;
    let k = cnew.dot(&(a2 * cnew)) + 2.0 * mv.dot(&cnew) + m[(2, 2)];
    // interior values are negative, so the ellipse is (y-c)^T A (y-c) = -k
    if -k <= 0.0 {
        return Err(GeomError::ChartOverflow);
    }
    let qn = a2 / (-k);
    let mut q3 = Matrix3::identity();
    for i in 0..2 {
        for j in 0..2 {
            q3[(i, j)] = qn[(i, j)];
        }
    }
    Ok((Vector3::new(cnew.x, cnew.y, 0.0), q3))
}

// ---------------------------------------------------------------------------
// JSON body specs and named presets
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodySpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<Vec<f64>>>,
    /// Facets as `[a_1, ..., a_dim, b]` rows for `l(x) = a . x + b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
}

fn default_dim() -> usize {
    2
}

impl BodySpec {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("body spec serializes")
    }
}

/// Vertices of the standard chart triangle (equilateral, circumradius 1.5).
pub fn standard_triangle_vertices() -> Vec<ChartPoint> {
    let rho = 1.5;
    [90.0_f64, 210.0, 330.0]
        .iter()
        .map(|deg| {
            let th = deg.to_radians();
            Vector3::new(rho * th.cos(), rho * th.sin(), 0.0)
        })
        .collect()
}

/// Facet functionals of the standard triangle, normalized to 0 at the
/// centroid and 1 on the opposite facet.
pub fn standard_triangle_facets() -> Vec<Facet> {
    standard_triangle_vertices()
        .iter()
        .map(|v| {
            let inr = 0.5 * v.norm();
            let n = -v / v.norm();
            Facet { a: [n.x / inr, n.y / inr, 0.0], b: 0.0 }
        })
        .collect()
}

impl ConvexBody {
    /// Named presets: `klein_disk`, `triangle_beta{B}`, `exact_simplex`.
    pub fn preset(name: &str) -> Result<ConvexBody> {
        if name == "klein_disk" {
            let mut b = ConvexBody::ellipsoid(2, Vector3::zeros(), Matrix3::identity())?;
            b.name = "klein_disk".into();
            return Ok(b);
        }
        if name == "exact_simplex" {
            let mut b = ConvexBody::exact_simplex(2, standard_triangle_vertices())?;
            b.name = "exact_simplex".into();
            return Ok(b);
        }
        if let Some(bs) = name.strip_prefix("triangle_beta") {
            let beta: f64 = bs
                .parse()
                .map_err(|_| GeomError::BadSpec(format!("bad preset name: {name}")))?;
            let mut b = ConvexBody::lse_polytope(2, standard_triangle_facets(), beta, 1.0)?;
            b.name = name.to_string();
            return Ok(b);
        }
        Err(GeomError::BadSpec(format!("unknown preset: {name}")))
    }

    pub fn from_spec(spec: &BodySpec) -> Result<ConvexBody> {
        let dim = spec.dim;
        check_dim(dim)?;
        match spec.kind.as_str() {
            "ellipsoid" => {
                let c = spec
                    .center
                    .as_ref()
                    .ok_or_else(|| GeomError::BadSpec("ellipsoid needs center".into()))?;
                let s = spec
                    .shape
                    .as_ref()
                    .ok_or_else(|| GeomError::BadSpec("ellipsoid needs shape".into()))?;
                let mut q = Matrix3::identity();
                for i in 0..dim {
                    for j in 0..dim {
                        q[(i, j)] = s[i][j];
                    }
                }
                ConvexBody::ellipsoid(dim, vec_to_point(dim, c)?, q)
            }
            "lse_polytope" => {
                let rows = spec
                    .facets
                    .as_ref()
                    .ok_or_else(|| GeomError::BadSpec("lse_polytope needs facets".into()))?;
                let facets = rows
                    .iter()
                    .map(|r| {
                        if r.len() != dim + 1 {
                            return Err(GeomError::BadSpec("facet row must be [a.., b]".into()));
                        }
                        let mut a = [0.0; 3];
                        for k in 0..dim {
                            a[k] = r[k];
                        }
                        Ok(Facet { a, b: r[dim] })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ConvexBody::lse_polytope(dim, facets, spec.beta.unwrap_or(16.0), spec.level.unwrap_or(1.0))
            }
            "exact_simplex" => {
                let rows = spec
                    .vertices
                    .as_ref()
                    .ok_or_else(|| GeomError::BadSpec("exact_simplex needs vertices".into()))?;
                let vs = rows
                    .iter()
                    .map(|r| vec_to_point(dim, r))
                    .collect::<Result<Vec<_>>>()?;
                ConvexBody::exact_simplex(dim, vs)
            }
            other => Err(GeomError::BadSpec(format!("unknown body kind: {other}"))),
        }
    }

    /// Resolve a `--body` argument: preset name or path to a JSON spec file.
    pub fn resolve(arg: &str) -> Result<ConvexBody> {
        if let Ok(b) = ConvexBody::preset(arg) {
            return Ok(b);
        }
        let text = std::fs::read_to_string(arg)
            .map_err(|e| GeomError::BadSpec(format!("cannot read body spec {arg}: {e}")))?;
        let spec: BodySpec = serde_json::from_str(&text)
            .map_err(|e| GeomError::BadSpec(format!("bad body spec: {e}")))?;
        ConvexBody::from_spec(&spec)
    }
}

fn vec_to_point(dim: usize, v: &[f64]) -> Result<ChartPoint> {
    if v.len() != dim {
        return Err(GeomError::BadSpec("coordinate arity mismatch".into()));
    }
    let mut p = Vector3::zeros();
    for (i, &c) in v.iter().enumerate() {
        if !c.is_finite() {
            return Err(GeomError::BadSpec("non-finite coordinate".into()));
        }
        p[i] = c;
    }
    Ok(p)
}
