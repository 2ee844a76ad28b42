use hilbertgeo::asymptotics::*;
use hilbertgeo::convex_body::ConvexBody;
use hilbertgeo::hilbert_core::GeodesicChord;
use nalgebra::Vector3;

fn main() {
    let disk = ConvexBody::preset("klein_disk").unwrap();
    let o = Vector3::zeros();
    let xb = Vector3::new(1.0, 0.0, 0.0);
    let pair = osculating_pair(&disk, &o, &xb, 0.2).unwrap();
    let kp = pair.e_plus.boundary_hessian(&xb).unwrap().form[(0, 0)];
    let km = pair.e_minus.boundary_hessian(&xb).unwrap().form[(0, 0)];
    println!("klein ratio={:.8} want {:.8}", kp / km, 0.8 / 1.2);
    let rs: Vec<f64> = vec![2.0, 4.0, 6.0, 8.0, 10.0];
    let rad = ratio_profile(&pair, RatioDirection::Radial, &rs).unwrap();
    let tan = ratio_profile(&pair, RatioDirection::Tangential, &rs).unwrap();
    let pc = parabola_chart(&pair).unwrap();
    println!("fit a={:.6} b={:.6} resid={:.1e}", pc.a, pc.b, pc.fit_residual);
    for (i, &r) in rs.iter().enumerate() {
        let (_, s) = pc.ray_point(r);
        println!("  r={r}: rad {:.8} cf {:.8} | tan {:.8} cf {:.8}", rad[i], pc.closed_form(RatioDirection::Radial, s), tan[i], pc.closed_form(RatioDirection::Tangential, s));
    }
    println!("tan limit want {:.8}", (1.2f64/0.8).sqrt());
    // triangle
    let tri = ConvexBody::preset("triangle_beta16").unwrap();
    let xb3 = tri.ray_boundary(&o, &Vector3::new((315.0f64).to_radians().cos(), (315.0f64).to_radians().sin(), 0.0)).unwrap().p_plus;
    let pt = osculating_pair(&tri, &o, &xb3, 0.2).unwrap();
    let proj = |b: &ConvexBody, x: &Vector3<f64>| -> f64 {
        let c = match b.kind() { hilbertgeo::convex_body::BodyKind::Ellipsoid { center, .. } => *center, _ => unreachable!() };
        let p = b.ray_boundary(&c, &(x - c)).unwrap().p_plus;
        b.boundary_hessian(&p).unwrap().form[(0, 0)]
    };
    let kp3 = proj(&pt.e_plus, &xb3);
    let km3 = proj(&pt.e_minus, &xb3);
    for (nm, b) in [("E-", &pt.e_minus), ("E+", &pt.e_plus)] {
        if let hilbertgeo::convex_body::BodyKind::Ellipsoid { center, shape } = b.kind() {
            println!("{nm}: c=({:.6e},{:.6e}) q=[{:.6e},{:.6e};{:.6e},{:.6e}]", center.x, center.y, shape[(0,0)], shape[(0,1)], shape[(1,0)], shape[(1,1)]);
        }
    }
    let ct0 = GeodesicChord::new(&tri, &o, &(xb3 - o)).unwrap();
    for r in [2.0f64, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0] {
        let p = ct0.point(r);
        println!("  r={r}: E- level {:+.3e}  E+ level {:+.3e}", pt.e_minus.level(&p), pt.e_plus.level(&p));
    }
    let pct = parabola_chart(&pt).unwrap();
    println!("tri ratio={:.8} fit a={:.6e} b={:.6e} resid={:.1e}", kp3 / km3, pct.a, pct.b, pct.fit_residual);
    let rs2 = vec![6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 20.0, 25.0, 30.0, 40.0];
    let radt = ratio_profile(&pt, RatioDirection::Radial, &rs2).unwrap();
    let tant = ratio_profile(&pt, RatioDirection::Tangential, &rs2).unwrap();
    println!("tri radial {radt:.6?}");
    println!("tri tangential {tant:.6?}");
    for (i, &r) in rs2.iter().enumerate() {
        let (_, s) = pct.ray_point(r);
        println!("  r={r}: rad {:.8} cf {:.8} | tan {:.8} cf {:.8}", radt[i], pct.closed_form(RatioDirection::Radial, s), tant[i], pct.closed_form(RatioDirection::Tangential, s));
    }
    // ellipse eps -> 0
    let mut shape = nalgebra::Matrix3::zeros();
    shape[(0, 0)] = 0.25; shape[(1, 1)] = 1.0;
    let ell = ConvexBody::ellipsoid(2, Vector3::zeros(), shape).unwrap();
    let xb2 = Vector3::new(2.0 * (0.7f64).cos(), (0.7f64).sin(), 0.0);
    for eps in [0.2, 0.05, 0.01] {
        let p = osculating_pair(&ell, &o, &xb2, eps).unwrap();
        let d = metric_distance(&p.e_plus, &p.e_minus, &[o, Vector3::new(0.5, 0.2, 0.0)]).unwrap();
        println!("ellipse eps={eps}: dist(E+,E-)={d:.4}");
    }
}
