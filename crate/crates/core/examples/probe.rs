use hilbertgeo::convex_body::ConvexBody;
use hilbertgeo::spectral::*;
use nalgebra::Vector3;
use std::time::Instant;

fn shoot(lam: f64, r0: f64, r1: f64, ball: bool) -> f64 {
    let h = 1e-4;
    let (mut r, mut u, mut v) = if ball {
        (h, 1.0 + 0.25 * lam * h * h, -0.5 * lam * h)
    } else {
        (r0, 0.0, 1.0)
    };
    while r < r1 {
        let f = |r: f64, u: f64, v: f64| -1.0 / r.tanh() * v - lam * u;
        let a1 = f(r, u, v);
        let a2 = f(r + 0.5 * h, u + 0.5 * h * v, v + 0.5 * h * a1);
        let a3 = f(r + 0.5 * h, u + 0.5 * h * (v + 0.5 * h * a1), v + 0.5 * h * a2);
        let a4 = f(r + h, u + h * (v + 0.5 * h * a2), v + h * a3);
        u += h / 6.0 * (v + 2.0 * (v + 0.5 * h * a1) + 2.0 * (v + 0.5 * h * a2) + (v + h * a3));
        v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        r += h;
    }
    u
}

// first root: scan lambda upward for the first sign change, then bisect
fn ode_lambda1(r0: f64, r1: f64, ball: bool) -> f64 {
    let f = |l: f64| shoot(l, r0, r1, ball);
    let step = 0.02;
    let mut lo = 0.01;
    let mut flo = f(lo);
    let mut hi = lo;
    loop {
        hi += step;
        let fhi = f(hi);
        if flo * fhi <= 0.0 {
            break;
        }
        lo = hi;
        flo = fhi;
        if hi > 40.0 {
            panic!("no root");
        }
    }
    for _ in 0..60 {
        let m = 0.5 * (lo + hi);
        if flo * f(m) <= 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    0.5 * (lo + hi)
}

fn main() {
    let disk = ConvexBody::preset("klein_disk").unwrap();
    let o = Vector3::zeros();

    // frozen oracle values
    for (r0, r1, ball) in [
        (0.0, 0.5, true),
        (0.0, 2.0, true),
        (0.0, 4.0, true),
        (0.0, 6.0, true),
        (0.0, 8.0, true),
        (1.0, 6.0, false),
        (2.0, 6.0, false),
        (3.0, 6.0, false),
        (1.0, 8.0, false),
        (2.0, 8.0, false),
        (3.0, 8.0, false),
    ] {
        let l = ode_lambda1(r0, r1, ball);
        println!("ODE {}({r0},{r1}) = {l:.6}", if ball { "ball" } else { "ann" });
    }

    // graded-mesh calibration: balls
    for ell in [0.25, 0.3] {
        let t0 = Instant::now();
        let res = experiment_lambda1_at(&disk, &o, &[2.0, 4.0, 6.0, 8.0], ell).unwrap();
        for r in &res {
            let ode = ode_lambda1(0.0, r.meta["R"], true);
            println!(
                "ball ell={ell} R={} n={} lam={:.5} extrap={:.5} rel={:+.2e} q={:.3}",
                r.meta["R"],
                r.n_dofs,
                r.eigenvalues[0],
                r.meta["lambda_extrap"],
                r.meta["lambda_extrap"] / ode - 1.0,
                r.meta["mesh_quality"],
            );
        }
        println!("  [{:.0}s]", t0.elapsed().as_secs_f64());
    }

    // annuli
    for ell in [0.25, 0.3] {
        for r_out in [6.0, 8.0] {
            let t0 = Instant::now();
            let res = experiment_essential_at(&disk, &o, &[1.0, 2.0, 3.0], r_out, ell).unwrap();
            for r in &res {
                let ode = ode_lambda1(r.meta["R_in"], r_out, false);
                println!(
                    "ann ell={ell} ({},{r_out}) n={} lam={:.5} extrap={:.5} rel={:+.2e} limit={:.4}",
                    r.meta["R_in"],
                    r.n_dofs,
                    r.eigenvalues[0],
                    r.meta["lambda_extrap"],
                    r.meta["lambda_extrap"] / ode - 1.0,
                    r.meta["limit_estimate"],
                );
            }
            println!("  [{:.0}s]", t0.elapsed().as_secs_f64());
        }
    }
}
