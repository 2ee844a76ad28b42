use hilbertgeo::convex_body::ConvexBody;
use hilbertgeo::spectral::*;
use nalgebra::Vector3;

fn main() {
    let o = Vector3::zeros();
    let d = ConvexBody::preset("klein_disk").unwrap();
    let t = ConvexBody::preset("triangle_beta16").unwrap();

    for (ri, ro, kr, kt) in [(1.0, 3.0, 5, 16), (1.0, 2.0, 5, 48), (1.0, 2.0, 8, 64)] {
        let m = mesh_annulus(&d, &o, ri, ro, kr, kt).unwrap();
        println!("ann({ri},{ro},{kr},{kt}) q={:.4}", m.quality);
    }
    for ell in [0.5, 0.3] {
        let m = mesh_graded(&d, &o, 0.0, 5.0, ell, &[2.0, 3.5]).unwrap();
        println!("graded klein ell={ell} q={:.4}", m.quality);
        let m = mesh_graded(&t, &o, 0.0, 5.0, ell, &[]).unwrap();
        println!("graded tri ell={ell} q={:.4}", m.quality);
        let m = mesh_graded(&d, &o, 1.0, 4.0, ell, &[]).unwrap();
        println!("graded klein ann ell={ell} q={:.4}", m.quality);
    }
    for (r, kr, kt) in [(2.0, 4, 12), (1.5, 8, 24), (0.5, 8, 24), (0.5, 16, 48), (2.0, 10, 32), (1.5, 6, 18)] {
        let m = mesh_ball(&d, &o, r, kr, kt).unwrap();
        println!("ball({r},{kr},{kt}) q={:.4}", m.quality);
    }

    let m = mesh_ball(&d, &o, 1.5, 8, 24).unwrap();
    let sys = assemble(&d, &m, 2).unwrap();
    let ones = nalgebra::DVector::from_element(sys.n, 1.0);
    let vol = ones.dot(&sys.m.matvec(&ones));
    let exact = ball_volumes(&d, &o, &[1.5], 96, 0.05, 256).unwrap()[0];
    println!("mass vol={vol:.5} exact={exact:.5} rel={:+.3e}", vol / exact - 1.0);

    let run = |kr: usize, kt: usize| -> f64 {
        let m = mesh_ball(&d, &o, 0.5, kr, kt).unwrap();
        let sys = assemble(&d, &m, 2).unwrap();
        dirichlet_eigs(&sys, &m, 1).unwrap().eigenvalues[0]
    };
    let (lc, lf) = (run(8, 24), run(16, 48));
    let ex = (4.0 * lf - lc) / 3.0;
    println!("half ball lc={lc:.5} lf={lf:.5} extrap={ex:.5} vs 23.455931 rel={:+.3e}", ex / 23.455931 - 1.0);

    let c = cheeger_lower(&d, &o, &[2.0, 3.0, 4.0]).unwrap();
    println!("cheeger klein = {c:.5}");

    let s = ConvexBody::preset("exact_simplex").unwrap();
    for rmax in [6.0, 8.0, 10.0, 12.0] {
        match ball_volumes(&s, &o, &[rmax], 48, 0.05, 256) {
            Ok(v) => println!("simplex V({rmax}) = {:.4}", v[0]),
            Err(e) => println!("simplex V({rmax}) ERR {e}"),
        }
    }
    let rl = [2.0, 4.0, 6.0, 8.0];
    match volume_growth(&s, &o, &rl) {
        Ok((g, v)) => println!("simplex growth {g:?} vols {v:?}"),
        Err(e) => println!("simplex growth ERR {e}"),
    }
}
