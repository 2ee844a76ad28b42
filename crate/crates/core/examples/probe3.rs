use hilbertgeo::convex_body::ConvexBody;
use hilbertgeo::spectral::*;
use nalgebra::Vector3;
use std::time::Instant;

fn main() {
    let tri = ConvexBody::preset("triangle_beta16").unwrap();
    let o = Vector3::zeros();
    let t0 = Instant::now();
    let res = experiment_lambda1_at(&tri, &o, &[8.0], 0.25).unwrap();
    for r in &res {
        println!(
            "tri ball ell=0.25 R={} n={} lam={:.5} coarse={:.5} extrap={:.5} q={:.4}",
            r.meta["R"], r.n_dofs, r.eigenvalues[0], r.meta["lambda_coarse"],
            r.meta["lambda_extrap"], r.meta["mesh_quality"],
        );
    }
    println!("  [{:.0}s]", t0.elapsed().as_secs_f64());
}
