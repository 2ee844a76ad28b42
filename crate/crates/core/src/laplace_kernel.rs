//! Per-point fiber data for the Finsler Laplacian: the angle form `alpha`,
//! fiber volume `mu`, symbol `sigma`, volume density `omega`, the weight
//! `a^2`, and two independent evaluations of the operator itself.
//!
//! Conventions (2-D): the reference norm `F_0` is the chart Euclidean one,
//! whose Legendre transform is the identity. Then
//!   `mu(x) = (1/2pi) \int (1/F*(x,p(phi)))^2 dphi`  (dual route),
//!   `alpha(theta) = mu^{-1} (|L(theta)|/F(theta))^2 dl/dtheta`
//! with `L = Legendre(e(theta))` and `l(theta)` its angle, and
//!   `sigma_{ij} = (2/2pi) \int v_i v_j alpha dtheta`, `v = e(theta)/F`.
//! The volume density `omega` relative to chart Lebesgue measure is `mu`
//! (Euclidean normalization), and the weight is `a^2 = mu sqrt(det sigma)`.

use nalgebra::{Matrix2, Vector2};

use crate::convex_body::ConvexBody;
use crate::error::{GeomError, Result};
use crate::hilbert_core::{finsler_norm_at, GeodesicChord, H_LEG};
use crate::{v2, ChartPoint};

/// Default fiber sample count.
pub const N_THETA: f64 = 256.0;
/// Arclength step for geodesic second differences.
pub const H_LAP: f64 = 1e-3;

/// Fiber samples and derived densities at one interior point.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FiberData {
    pub x: [f64; 2],
    pub n_theta: usize,
    /// Uniform angles on the chart unit circle.
    pub theta: Vec<f64>,
    /// `F(x, e(theta_k))`.
    pub f: Vec<f64>,
    /// `F*(x, p(theta_k))` for unit covectors at the same angles.
    pub fstar: Vec<f64>,
    /// Angles of the Legendre images of `e(theta_k)`, unwrapped.
    pub ell: Vec<f64>,
    /// Angle-form density w.r.t. `dtheta`.
    pub alpha: Vec<f64>,
    pub mu: f64,
    /// Dual metric (the symbol), 2x2 SPD.
    #[serde(serialize_with = "ser_mat2")]
    pub sigma: Matrix2<f64>,
    /// Volume density relative to chart Lebesgue measure.
    pub omega: f64,
    /// Weighted-Laplacian weight `a^2`.
    pub weight: f64,
}

fn ser_mat2<S: serde::Serializer>(m: &Matrix2<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
}

/// Dual norm of the unit covector with angle `phi`, reusing a precomputed
/// grid of primal norm samples for the coarse scan, then refining by
/// golden section with exact norm evaluations.
fn dual_norm_grid(
    body: &ConvexBody,
    x: &ChartPoint,
    phi: f64,
    f_grid: &[f64],
) -> Result<f64> {
    let tau = std::f64::consts::TAU;
    let n = f_grid.len();
    let (px, py) = (phi.cos(), phi.sin());
    let mut best_k = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (k, &fk) in f_grid.iter().enumerate() {
        let th = tau * (k as f64) / (n as f64);
        let v = (px * th.cos() + py * th.sin()) / fk;
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let g = |th: f64| -> Result<f64> {
        let e = v2(th.cos(), th.sin());
        Ok((px * e.x + py * e.y) / finsler_norm_at(body, x, &e)?)
    };
    let step = tau / (n as f64);
    let mut a = tau * (best_k as f64) / (n as f64) - step;
    let mut b = a + 2.0 * step;
    let gold = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gold * (b - a);
    let mut d = a + gold * (b - a);
    let mut gc = g(c)?;
    let mut gd = g(d)?;
    for _ in 0..40 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - gold * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + gold * (b - a);
            gd = g(d)?;
        }
    }
    g(0.5 * (a + b))
}

/// Derivative of a periodic function from uniform samples over one period,
/// by direct trigonometric interpolation (spectrally accurate once the
/// function is resolved by the grid). The Nyquist mode is dropped.
fn trig_derivative(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let tau = std::f64::consts::TAU;
    // all angles are multiples of tau/n: use modular lookup tables to keep
    // the O(n^2) transform away from transcendental calls
    let sin_t: Vec<f64> = (0..n).map(|k| (tau * k as f64 / n as f64).sin()).collect();
    let cos_t: Vec<f64> = (0..n).map(|k| (tau * k as f64 / n as f64).cos()).collect();
    let mut coef = Vec::with_capacity(n / 2);
    for m in 1..n / 2 {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut idx = 0usize;
        for &v in vals {
            a += v * cos_t[idx];
            b += v * sin_t[idx];
            idx += m;
            if idx >= n {
                idx -= n;
            }
        }
        coef.push((m as f64, 2.0 * a / n as f64, 2.0 * b / n as f64));
    }
    let mut out = vec![0.0; n];
    for (mi, &(m, a, b)) in coef.iter().enumerate() {
        let mstep = mi + 1;
        let mut idx = 0usize;
        for o in out.iter_mut() {
            *o += m * (b * cos_t[idx] - a * sin_t[idx]);
            idx += mstep;
            if idx >= n {
                idx -= n;
            }
        }
    }
    out
}

/// Build the full fiber data at `x` with `n_theta` uniform angle samples.
pub fn fiber_data(body: &ConvexBody, x: &ChartPoint, n_theta: usize) -> Result<FiberData> {
    if body.dim() != 2 {
        return Err(GeomError::Unsupported(body.dim()));
    }
    if !body.regular() {
        return Err(GeomError::NotRegular);
    }
    if !body.contains(x) {
        return Err(GeomError::NotInterior);
    }
    if n_theta < 64 || n_theta % 2 != 0 {
        return Err(GeomError::BadSpec("fiber sample count must be even and >= 64".into()));
    }
    let tau = std::f64::consts::TAU;
    let n = n_theta;
    let dth = tau / (n as f64);

    let theta: Vec<f64> = (0..n).map(|k| dth * k as f64).collect();
    let mut f = Vec::with_capacity(n);
    for &th in &theta {
        f.push(finsler_norm_at(body, x, &v2(th.cos(), th.sin()))?);
    }

    // Legendre images of the Euclidean-unit directions, by central
    // differences of F^2/2 on the fiber
    let energy = |ux: f64, uy: f64| -> Result<f64> {
        let fv = finsler_norm_at(body, x, &v2(ux, uy))?;
        Ok(0.5 * fv * fv)
    };
    let h = H_LEG;
    let mut lmag = Vec::with_capacity(n);
    let mut ell_raw = Vec::with_capacity(n);
    for &th in &theta {
        let (ex, ey) = (th.cos(), th.sin());
        let px = (energy(ex + h, ey)? - energy(ex - h, ey)?) / (2.0 * h);
        let py = (energy(ex, ey + h)? - energy(ex, ey - h)?) / (2.0 * h);
        lmag.push((px * px + py * py).sqrt());
        ell_raw.push(py.atan2(px));
    }
    // unwrap so the angle map is a continuous degree-one circle map
    let mut ell = Vec::with_capacity(n);
    let mut prev = ell_raw[0];
    let mut offset = 0.0;
    for (k, &lr) in ell_raw.iter().enumerate() {
        let mut v = lr + offset;
        if k > 0 {
            while v - prev > std::f64::consts::PI {
                v -= tau;
                offset -= tau;
            }
            while v - prev < -std::f64::consts::PI {
                v += tau;
                offset += tau;
            }
        }
        ell.push(v);
        prev = v;
    }

    // Jacobian dl/dtheta: l(theta) - theta is periodic, so differentiate
    // it spectrally (centered differences leave O(dtheta^2) bias, far above
    // the 1e-6 normalization target)
    let delta: Vec<f64> = ell.iter().zip(theta.iter()).map(|(l, t)| l - t).collect();
    let ddelta = trig_derivative(&delta);
    // near-polyhedral fibers have long flat stretches where the true
    // Jacobian is positive but tiny; differentiation noise there dips a
    // little below zero and is clamped. A dip that is large relative to
    // the Jacobian scale signals genuine non-monotonicity.
    let jmax = ddelta.iter().fold(1.0_f64, |m, &d| m.max(1.0 + d));
    let mut jac = Vec::with_capacity(n);
    for k in 0..n {
        let j = 1.0 + ddelta[k];
        if j <= -0.02 * jmax {
            return Err(GeomError::IllConditionedFiber);
        }
        jac.push(j.max(0.0));
    }

    // dual norms on the same angle grid; mu by the dual-fiber integral
    let mut fstar = Vec::with_capacity(n);
    for &th in &theta {
        fstar.push(dual_norm_grid(body, x, th, &f)?);
    }
    let mu = fstar.iter().map(|fs| 1.0 / (fs * fs)).sum::<f64>() * dth / tau;

    let alpha: Vec<f64> = (0..n)
        .map(|k| (lmag[k] / f[k]).powi(2) * jac[k] / mu)
        .collect();

    // symbol: second moments of the F-unit vectors against alpha
    let mut sigma = Matrix2::zeros();
    for k in 0..n {
        let v = Vector2::new(theta[k].cos(), theta[k].sin()) / f[k];
        sigma += (alpha[k] * dth) * v * v.transpose();
    }
    sigma *= 2.0 / tau;

    let det = sigma.determinant();
    if !(det > 0.0) || !(mu > 0.0) {
        return Err(GeomError::IllConditionedFiber);
    }
    Ok(FiberData {
        x: [x.x, x.y],
        n_theta: n,
        theta,
        f,
        fstar,
        ell,
        alpha,
        mu,
        sigma,
        omega: mu,
        weight: mu * det.sqrt(),
    })
}

/// Fast primal-route evaluation of `(mu, sigma)` only, for assembly loops.
///
/// Uses the angle-form normalization to express both moments through the
/// same primal fiber integral: with `w(theta) = (|L|/F)^2 dl/dtheta`,
/// `int w dtheta = 2 pi mu`, so
///   `mu = (1/2pi) int w dtheta`,
///   `sigma = int v v^T w dtheta / (pi int w dtheta / 2)`-style ratio,
/// i.e. sigma is self-normalized against the same measure. This needs no
/// dual-norm maximizations at all and converges spectrally once the fiber
/// features are resolved.
pub fn fiber_moments(body: &ConvexBody, x: &ChartPoint, n_theta: usize) -> Result<(f64, Matrix2<f64>)> {
    if body.dim() != 2 {
        return Err(GeomError::Unsupported(body.dim()));
    }
    if !body.contains(x) {
        return Err(GeomError::NotInterior);
    }
    let tau = std::f64::consts::TAU;
    let n = n_theta;
    let dth = tau / n as f64;

    let h = H_LEG;
    let energy = |ux: f64, uy: f64| -> Result<f64> {
        let fv = finsler_norm_at(body, x, &v2(ux, uy))?;
        Ok(0.5 * fv * fv)
    };
    let mut f_grid = Vec::with_capacity(n);
    let mut lmag = Vec::with_capacity(n);
    let mut ell_raw = Vec::with_capacity(n);
    for k in 0..n {
        let th = dth * k as f64;
        let (ey, ex) = th.sin_cos();
        f_grid.push(finsler_norm_at(body, x, &v2(ex, ey))?);
        let px = (energy(ex + h, ey)? - energy(ex - h, ey)?) / (2.0 * h);
        let py = (energy(ex, ey + h)? - energy(ex, ey - h)?) / (2.0 * h);
        lmag.push((px * px + py * py).sqrt());
        ell_raw.push(py.atan2(px));
    }
    let delta = unwrap_angles(&ell_raw);
    let ddelta = trig_derivative(&delta);
    let jmax = ddelta.iter().fold(1.0_f64, |m, &d| m.max(1.0 + d));

    let mut total = 0.0;
    let mut sigma = Matrix2::zeros();
    for k in 0..n {
        let j = 1.0 + ddelta[k];
        if j <= -0.02 * jmax {
            return Err(GeomError::IllConditionedFiber);
        }
        let w = (lmag[k] / f_grid[k]).powi(2) * j.max(0.0);
        total += w;
        let th = dth * k as f64;
        let (s, c) = th.sin_cos();
        let v = Vector2::new(c, s) / f_grid[k];
        sigma += w * v * v.transpose();
    }
    let mu = total * dth / tau;
    sigma *= 2.0 / total;
    if !(mu > 0.0) || !(sigma.determinant() > 0.0) {
        return Err(GeomError::IllConditionedFiber);
    }
    Ok((mu, sigma))
}

/// Fiber-rounding affine normalization at `x`. Returns a mapped body (with
/// `x` kept fixed) whose unit fiber at `x` has O(1) aspect ratio, together
/// with the linear part `A` of the map. Near the boundary the fiber
/// degenerates with aspect ~ 1/gap, which no fixed angular grid can resolve;
/// all fiber densities are affinely natural, so they are computed on the
/// normalized copy and pulled back (`sigma = A^{-1} sigma' A^{-T}`,
/// `mu = mu' |det A|`).
pub fn normalize_at(body: &ConvexBody, x: &ChartPoint) -> Result<(ConvexBody, Matrix2<f64>)> {
    let a = normalize_matrix(body, x)?;
    let b = Vector2::new(x.x, x.y) - a * Vector2::new(x.x, x.y);
    #[rustfmt::skip]
    let t3 = nalgebra::Matrix3::new(
        a[(0, 0)], a[(0, 1)], b.x,
        a[(1, 0)], a[(1, 1)], b.y,
        0.0, 0.0, 1.0,
    );
    Ok((body.projective_map(&t3)?, a))
}

/// The linear part of [`normalize_at`] alone. Because the Hilbert norm is
/// affinely natural (`F_{T body}(Tx, w) = F_body(x, A^{-1} w)`), callers can
/// evaluate norms on the normalized body without constructing it.
pub fn normalize_matrix(body: &ConvexBody, x: &ChartPoint) -> Result<Matrix2<f64>> {
    if body.dim() != 2 {
        return Err(GeomError::Unsupported(body.dim()));
    }
    if !body.contains(x) {
        return Err(GeomError::NotInterior);
    }
    // Seed with the boundary-normal axis: that is the thin fiber direction,
    // and it must be located precisely (a misaligned seed leaves the aspect
    // ratio at aspect * angle_error, which the moment iteration cannot fix).
    let g = body.level_grad(x);
    let gn = (g.x * g.x + g.y * g.y).sqrt();
    let n = if gn > 1e-9 {
        Vector2::new(g.x / gn, g.y / gn)
    } else {
        Vector2::new(1.0, 0.0)
    };
    let t = Vector2::new(-n.y, n.x);
    let fa = finsler_norm_at(body, x, &v2(n.x, n.y))?;
    let ft = finsler_norm_at(body, x, &v2(t.x, t.y))?;
    let mut a = fa * n * n.transpose() + ft * t * t.transpose();
    // Two rounds of second-moment equilibration clean up the O(1) residue.
    for _ in 0..2 {
        let ainv = a.try_inverse().ok_or(GeomError::IllConditionedFiber)?;
        let m = 96;
        let mut s = Matrix2::zeros();
        for j in 0..m {
            let th = std::f64::consts::TAU * j as f64 / m as f64;
            let e = Vector2::new(th.cos(), th.sin());
            let d = ainv * e;
            let r = 1.0 / finsler_norm_at(body, x, &v2(d.x, d.y))?;
            s += r * r * e * e.transpose();
        }
        s /= m as f64;
        let se = nalgebra::SymmetricEigen::new(s);
        let mut step = Matrix2::zeros();
        for k in 0..2 {
            let ev = se.eigenvalues[k];
            if !(ev > 0.0) {
                return Err(GeomError::IllConditionedFiber);
            }
            let u = se.eigenvectors.column(k);
            step += (1.0 / (2.0 * ev).sqrt()) * u * u.transpose();
        }
        a = step * a;
    }
    Ok(a)
}

/// `(mu, sigma)` by quadrature in the dual angle on the affinely normalized
/// fiber. With `u(theta)` the unit fiber curve and `l(theta)` the angle of
/// its outward normal, `w dtheta = (1/F*(l))^2 dl` exactly, so integrating
/// against `dl` needs no Jacobian and survives the near-polyhedral
/// concentration of the angle form at deep points (where `dl/dtheta`
/// develops atoms). Wide `dl` cells (fiber corners) are subdivided with the
/// contact point interpolated along the chord. Needs only primal norm
/// evaluations, so non-regular bodies (exact simplex) are accepted.
pub fn fiber_moments_dual(
    body: &ConvexBody,
    x: &ChartPoint,
    n_theta: usize,
) -> Result<(f64, Matrix2<f64>)> {
    if n_theta < 64 || n_theta % 2 != 0 {
        return Err(GeomError::BadSpec("n_theta must be even and >= 64".into()));
    }
    let a = normalize_matrix(body, x)?;
    let ainv_n = a.try_inverse().ok_or(GeomError::IllConditionedFiber)?;
    let tau = std::f64::consts::TAU;
    let n = n_theta;
    let h = tau / n as f64;
    let mut u = Vec::with_capacity(n);
    for j in 0..n {
        let th = j as f64 * h;
        let (s, c) = th.sin_cos();
        // norm on the normalized body by affine naturality
        let d = ainv_n * Vector2::new(c, s);
        let f = finsler_norm_at(body, x, &v2(d.x, d.y))?;
        u.push(Vector2::new(c / f, s / f));
    }
    // Outward normal angle per node, unwrapped and monotonized (convexity
    // makes the true map monotone; finite differences add ~h^2 jitter).
    let mut ell = Vec::with_capacity(n);
    for j in 0..n {
        let t = u[(j + 1) % n] - u[(j + n - 1) % n];
        let mut nn = Vector2::new(t.y, -t.x);
        if nn.dot(&u[j]) < 0.0 {
            nn = -nn;
        }
        ell.push(nn.y.atan2(nn.x));
    }
    // Steps wrapped to [0, tau); backward jitter (norm noise near the
    // boundary, up to ~1e-6 rad) lands just below tau and is clipped to
    // zero. Genuine corner cells stay below ~pi after normalization.
    let step = |a: f64, b: f64| -> f64 {
        let d = (b - a).rem_euclid(tau);
        if d > tau - 0.5 {
            0.0
        } else {
            d
        }
    };
    let mut unw = Vec::with_capacity(n);
    unw.push(ell[0]);
    for j in 1..n {
        let d = step(ell[j - 1], ell[j]);
        unw.push(unw[j - 1] + d);
    }
    let wrap = step(ell[n - 1], ell[0]);
    let total = unw[n - 1] - unw[0] + wrap;
    if !(total > 0.9 * tau && total < 1.1 * tau) {
        return Err(GeomError::IllConditionedFiber);
    }
    // Renormalize the clipped partition back to a full turn.
    let scale = tau / total;
    let mut mu = 0.0;
    let mut sigma = Matrix2::zeros();
    for j in 0..n {
        let j2 = (j + 1) % n;
        let dl = scale * if j2 == 0 { wrap } else { unw[j2] - unw[j] };
        if dl <= 0.0 {
            continue;
        }
        let sub = (dl / h).ceil().max(1.0) as usize;
        for s in 0..sub {
            let t = (s as f64 + 0.5) / sub as f64;
            let phi = unw[0] + (unw[j] - unw[0]) * scale + t * dl;
            let uc = (1.0 - t) * u[j] + t * u[j2];
            let fstar = uc.dot(&Vector2::new(phi.cos(), phi.sin()));
            if !(fstar > 0.0) {
                return Err(GeomError::IllConditionedFiber);
            }
            let w = (dl / sub as f64) / (fstar * fstar);
            mu += w;
            sigma += 2.0 * w * uc * uc.transpose();
        }
    }
    mu /= tau;
    // The dual-angle integral carries an extra factor mu (the angle form is
    // mu-normalized), so sigma is self-normalized against the same measure.
    sigma /= tau * mu;
    let ainv = a.try_inverse().ok_or(GeomError::IllConditionedFiber)?;
    let mu_back = mu * a.determinant().abs();
    let sigma_back = ainv * sigma * ainv.transpose();
    if !(mu_back > 0.0) || !(sigma_back.determinant() > 0.0) {
        return Err(GeomError::IllConditionedFiber);
    }
    Ok((mu_back, sigma_back))
}

/// Unwrap raw angles into `angle(k) - theta_k`, periodic and continuous.
fn unwrap_angles(raw: &[f64]) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let n = raw.len();
    let dth = tau / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut prev = raw[0];
    let mut offset = 0.0;
    for (k, &r) in raw.iter().enumerate() {
        let mut v = r + offset;
        while v - prev > std::f64::consts::PI {
            v -= tau;
            offset -= tau;
        }
        while v - prev < -std::f64::consts::PI {
            v += tau;
            offset += tau;
        }
        prev = v;
        out.push(v - dth * k as f64);
    }
    out
}

/// The symbol `sigma^F(x)` (dual metric) at default resolution.
pub fn symbol(body: &ConvexBody, x: &ChartPoint) -> Result<Matrix2<f64>> {
    Ok(fiber_data(body, x, 256)?.sigma)
}

/// Volume density relative to chart Lebesgue measure (`mu`, with the
/// Euclidean normalization). Only needs dual norms, so it also accepts
/// non-regular bodies such as the exact simplex.
pub fn omega_density(body: &ConvexBody, x: &ChartPoint) -> Result<f64> {
    if body.dim() != 2 {
        return Err(GeomError::Unsupported(body.dim()));
    }
    if !body.contains(x) {
        return Err(GeomError::NotInterior);
    }
    let tau = std::f64::consts::TAU;
    let n = 256;
    let dth = tau / (n as f64);
    let mut f_grid = Vec::with_capacity(n);
    for k in 0..n {
        let th = dth * k as f64;
        f_grid.push(finsler_norm_at(body, x, &v2(th.cos(), th.sin()))?);
    }
    let mut mu = 0.0;
    for k in 0..n {
        let fs = dual_norm_grid(body, x, dth * k as f64, &f_grid)?;
        mu += 1.0 / (fs * fs);
    }
    Ok(mu * dth / tau)
}

/// Finsler Laplacian by its definition: fiber average of second derivatives
/// of `f` along unit-speed geodesics, against the angle form.
pub fn laplacian_fiber<G>(body: &ConvexBody, x: &ChartPoint, func: G) -> Result<f64>
where
    G: Fn(&ChartPoint) -> f64,
{
    // 1024 samples keep the angle form accurate on near-polyhedral fibers
    let fd = fiber_data(body, x, 1024)?;
    laplacian_fiber_with(body, x, &fd, func)
}

/// Same as [`laplacian_fiber`] with precomputed fiber data.
pub fn laplacian_fiber_with<G>(
    body: &ConvexBody,
    x: &ChartPoint,
    fd: &FiberData,
    func: G,
) -> Result<f64>
where
    G: Fn(&ChartPoint) -> f64,
{
    let tau = std::f64::consts::TAU;
    let dth = tau / fd.n_theta as f64;
    let f0 = func(x);
    let mut acc = 0.0;
    for (k, &th) in fd.theta.iter().enumerate() {
        let chord = GeodesicChord::new(body, x, &v2(th.cos(), th.sin()))?;
        let d2 =
            (func(&chord.point(H_LAP)) - 2.0 * f0 + func(&chord.point(-H_LAP))) / (H_LAP * H_LAP);
        acc += d2 * fd.alpha[k] * dth;
    }
    Ok(acc * 2.0 / tau)
}

/// Finsler Laplacian through the weighted-Laplacian identity:
/// `Delta^F f = (1/mu) div(mu sigma grad f)`, with the divergence taken by
/// central differences of the flux field on a local stencil.
pub fn laplacian_weighted<G>(body: &ConvexBody, x: &ChartPoint, func: G) -> Result<f64>
where
    G: Fn(&ChartPoint) -> f64,
{
    let h = 1e-3;
    // Moments need finer fibers than the operator itself: near corners of
    // sharply smoothed polytopes the 1024-point moments still carry ~5e-3
    // relative error, which the divergence stencil amplifies.
    let n_mom = 2048;
    let flux = |p: &ChartPoint| -> Result<Vector2<f64>> {
        let (mu, sigma) = fiber_moments(body, p, n_mom)?;
        let hg = 1e-4;
        let gx = (func(&v2(p.x + hg, p.y)) - func(&v2(p.x - hg, p.y))) / (2.0 * hg);
        let gy = (func(&v2(p.x, p.y + hg)) - func(&v2(p.x, p.y - hg))) / (2.0 * hg);
        Ok(mu * (sigma * Vector2::new(gx, gy)))
    };
    let fe = flux(&v2(x.x + h, x.y))?;
    let fw = flux(&v2(x.x - h, x.y))?;
    let fn_ = flux(&v2(x.x, x.y + h))?;
    let fs = flux(&v2(x.x, x.y - h))?;
    let div = (fe.x - fw.x) / (2.0 * h) + (fn_.y - fs.y) / (2.0 * h);
    let (mu, _) = fiber_moments(body, x, n_mom)?;
    Ok(div / mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn disk() -> ConvexBody {
        ConvexBody::preset("klein_disk").unwrap()
    }
    fn tri() -> ConvexBody {
        ConvexBody::preset("triangle_beta16").unwrap()
    }

    fn norm_check(fd: &FiberData) -> f64 {
        let dth = std::f64::consts::TAU / fd.n_theta as f64;
        fd.alpha.iter().sum::<f64>() * dth / std::f64::consts::TAU
    }

    #[test]
    fn euclidean_fiber_at_disk_center() {
        let fd = fiber_data(&disk(), &crate::v2(0.0, 0.0), 256).unwrap();
        for a in &fd.alpha {
            assert_abs_diff_eq!(*a, 1.0, epsilon = 1e-7);
        }
        assert_relative_eq!(fd.mu, 1.0, epsilon = 1e-8);
        assert_relative_eq!(fd.sigma[(0, 0)], 1.0, epsilon = 1e-7);
        assert_relative_eq!(fd.sigma[(1, 1)], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(fd.sigma[(0, 1)], 0.0, epsilon = 1e-9);
        assert_relative_eq!(fd.weight, 1.0, epsilon = 1e-7);
        assert_relative_eq!(norm_check(&fd), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn klein_dual_metric_at_half_radius() {
        let fd = fiber_data(&disk(), &crate::v2(0.5, 0.0), 256).unwrap();
        assert_relative_eq!(fd.sigma[(0, 0)], 0.5625, epsilon = 1e-6);
        assert_relative_eq!(fd.sigma[(1, 1)], 0.75, epsilon = 1e-6);
        assert_abs_diff_eq!(fd.sigma[(0, 1)], 0.0, epsilon = 1e-8);
        assert_relative_eq!(norm_check(&fd), 1.0, epsilon = 1e-6);
        // Riemannian case: the weight is identically 1
        assert_relative_eq!(fd.weight, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn triangle_fiber_normalization() {
        let pts = [
            crate::v2(0.0, 0.0),
            crate::v2(0.3, 0.2),
            crate::v2(-0.5, -0.1),
            crate::v2(0.1, 0.6),
        ];
        for p in &pts {
            // the beta=16 fiber has ~0.05 rad features; the quadratures
            // only reach the 1e-6 target once those are well resolved
            let fd = fiber_data(&tri(), p, 4096).unwrap();
            assert_relative_eq!(norm_check(&fd), 1.0, epsilon = 1e-6);
            assert!(fd.mu > 0.0 && fd.weight > 0.0);
            let eig = fd.sigma.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
        }
    }

    #[test]
    fn moments_match_full_fiber_data() {
        // dual-route (mu, sigma) against the full primal construction
        let d = disk();
        for p in [crate::v2(0.5, 0.0), crate::v2(-0.2, 0.4)] {
            let fd = fiber_data(&d, &p, 256).unwrap();
            let (mu, sigma) = fiber_moments(&d, &p, 256).unwrap();
            assert_relative_eq!(mu, fd.mu, epsilon = 1e-7);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(sigma[(i, j)], fd.sigma[(i, j)], epsilon = 1e-6);
                }
            }
        }
        let t = tri();
        for p in [crate::v2(0.3, 0.2), crate::v2(0.1, 0.6)] {
            let fd = fiber_data(&t, &p, 4096).unwrap();
            let (mu, sigma) = fiber_moments(&t, &p, 4096).unwrap();
            assert_relative_eq!(mu, fd.mu, epsilon = 1e-6);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(sigma[(i, j)], fd.sigma[(i, j)], epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn omega_matches_hyperbolic_density() {
        // ratio of omega to (1 - r^2)^{-3/2} must be constant in r
        let d = disk();
        let mut ratios = Vec::new();
        for r in [0.0, 0.2, 0.4, 0.6] {
            let om = omega_density(&d, &crate::v2(r, 0.0)).unwrap();
            ratios.push(om * (1.0 - r * r as f64).powf(1.5));
        }
        for w in ratios.windows(2) {
            assert_relative_eq!(w[0], w[1], epsilon = 1e-6);
        }
    }

    #[test]
    fn omega_on_exact_simplex_interior() {
        let s = ConvexBody::preset("exact_simplex").unwrap();
        let om = omega_density(&s, &s.base()).unwrap();
        assert!(om.is_finite() && om > 0.0);
    }

    #[test]
    fn mu_bilipschitz_bounds() {
        // C^{-n} <= mu <= C^n with C measured from the fiber samples
        for (body, pts) in [
            (disk(), vec![crate::v2(0.3, 0.1), crate::v2(-0.6, 0.2)]),
            (tri(), vec![crate::v2(0.2, 0.3), crate::v2(-0.4, -0.2)]),
        ] {
            for p in &pts {
                let fd = fiber_data(&body, p, 256).unwrap();
                let fmax = fd.f.iter().cloned().fold(0.0, f64::max);
                let fmin = fd.f.iter().cloned().fold(f64::INFINITY, f64::min);
                // normalize the comparison metric so C is symmetric
                let s = (fmax * fmin).sqrt();
                let c = fmax / s;
                let mu_scaled = fd.mu / (s * s);
                assert!(mu_scaled <= c.powi(2) + 1e-9);
                assert!(mu_scaled >= c.powi(-2) - 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_examples_at_disk_center() {
        let d = disk();
        let o = crate::v2(0.0, 0.0);
        assert_abs_diff_eq!(laplacian_fiber(&d, &o, |_| 3.7).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            laplacian_fiber(&d, &o, |p| 2.0 * p.x - p.y).unwrap(),
            0.0,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            laplacian_fiber(&d, &o, |p| p.x * p.x + p.y * p.y).unwrap(),
            4.0,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            laplacian_weighted(&d, &o, |p| p.x * p.x + p.y * p.y).unwrap(),
            4.0,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(laplacian_weighted(&d, &o, |_| 1.0).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn dual_route_equivalence_on_triangle() {
        use rand::{Rng, SeedableRng};
        let t = tri();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        let bump = |p: &ChartPoint| (-((p.x - 0.1) * (p.x - 0.1) + (p.y + 0.2) * (p.y + 0.2))).exp();
        let mut done = 0;
        while done < 10 {
            let p = crate::v2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if t.level(&p) > -0.3 {
                continue;
            }
            done += 1;
            let a = laplacian_fiber(&t, &p, bump).unwrap();
            let b = laplacian_weighted(&t, &p, bump).unwrap();
            assert!(
                (a - b).abs() / (1.0 + a.abs()) <= 1e-3,
                "fiber {a} vs weighted {b} at {p:?}"
            );
        }
    }

    fn deep_point(body: &ConvexBody, deg: f64, r: f64) -> ChartPoint {
        let th = deg.to_radians();
        let chord =
            GeodesicChord::new(body, &crate::v2(0.0, 0.0), &crate::v2(th.cos(), th.sin())).unwrap();
        chord.point(r)
    }

    // Klein oracle at (tanh r, 0): sigma = diag(w^2, w), mu = w^{-3/2},
    // w = 1 - tanh(r)^2. The raw grid cannot resolve the fiber at r = 8
    // (aspect ~ e^{2r}); only the normalized route can.
    #[test]
    fn dual_moments_klein_oracle_to_the_boundary() {
        let d = disk();
        for r in [0.5, 2.0, 8.0] {
            let p = deep_point(&d, 0.0, r);
            let w = 1.0 - p.x * p.x;
            let (mu, s) = fiber_moments_dual(&d, &p, 1024).unwrap();
            assert_relative_eq!(mu, w.powf(-1.5), max_relative = 1e-5);
            assert_relative_eq!(s[(0, 0)], w * w, max_relative = 1e-5);
            assert_relative_eq!(s[(1, 1)], w, max_relative = 1e-5);
            assert_abs_diff_eq!(s[(0, 1)], 0.0, epsilon = 1e-7 * w);
        }
    }

    // Two fully independent routes for the same moments: primal angle-form
    // quadrature vs dual-angle change of variables.
    #[test]
    fn dual_moments_match_primal_route_inside() {
        for (body, p) in [
            (disk(), crate::v2(0.31, -0.2)),
            (tri(), crate::v2(-0.3, -0.25)),
            (tri(), crate::v2(0.1, 0.45)),
        ] {
            let (mp, sp) = fiber_moments(&body, &p, 4096).unwrap();
            let (md, sd) = fiber_moments_dual(&body, &p, 1024).unwrap();
            assert_relative_eq!(md, mp, max_relative = 5e-4);
            assert!((sd - sp).norm() / sp.norm() < 1e-3);
        }
    }

    // Deep in the smoothed triangle the angle form concentrates into
    // near-atoms and the primal route fails outright; the dual route must
    // stay internally convergent there.
    #[test]
    fn dual_moments_deep_triangle_convergence() {
        let t = tri();
        for (deg, r) in [(0.0, 4.0), (55.0, 6.0), (90.0, 8.0), (150.0, 7.0)] {
            let p = deep_point(&t, deg, r);
            assert!(fiber_moments(&t, &p, 1024).is_err());
            let (m1, s1) = fiber_moments_dual(&t, &p, 1024).unwrap();
            let (m2, s2) = fiber_moments_dual(&t, &p, 2048).unwrap();
            assert!(m1 > 0.0 && s1.determinant() > 0.0);
            assert_relative_eq!(m1, m2, max_relative = 2e-3);
            assert!((s1 - s2).norm() / s2.norm() < 2e-3);
        }
    }

    // The exact simplex is not regular but has a perfectly good volume
    // density; deep points must work (polynomial volume growth relies on it).
    #[test]
    fn dual_moments_exact_simplex_deep() {
        let s = ConvexBody::preset("exact_simplex").unwrap();
        for r in [2.0, 5.0, 8.0] {
            let p = deep_point(&s, 53.13, r);
            let (m1, _) = fiber_moments_dual(&s, &p, 1024).unwrap();
            let (m2, _) = fiber_moments_dual(&s, &p, 4096).unwrap();
            assert_relative_eq!(m1, m2, max_relative = 5e-3);
        }
    }
}
