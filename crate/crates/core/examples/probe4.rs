use hilbertgeo::convex_body::ConvexBody;
use hilbertgeo::spectral::ball_volumes;
use nalgebra::Vector3;

fn main() {
    let o = Vector3::zeros();
    let s = ConvexBody::preset("exact_simplex").unwrap();
    for nt in [96usize, 384, 1536] {
        for dt in [0.05, 0.02] {
            match ball_volumes(&s, &o, &[2.0, 4.0, 6.0], nt, dt, 256) {
                Ok(v) => println!("nt={nt} dt={dt}: V = {:?}  ratios {:.3} {:.3}", v, v[1]/v[0], v[2]/v[1]),
                Err(e) => println!("nt={nt} dt={dt}: ERR {e}"),
            }
        }
    }
}
