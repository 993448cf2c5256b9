//! Piecewise-linear interpolation of `|x|^2` on disk meshes: the sampled
//! error falls by about four per halving of h and stays below the
//! `2 C_BH h^2 |f|_{W2,inf}` bound.

use fracdim::constants::bramble_hilbert_constant;
use fracdim::geometry::{Point, Region};
use fracdim::mesh::{build_mesh, NodalVector};

fn main() -> fracdim::Result<()> {
    let disk = Region::ball(Point::new2(0.0, 0.0), 1.0, 0);
    let samples = disk.samples(20_000, 3);
    let f = |p: &Point| p.norm_sq();
    let c_bh = bramble_hilbert_constant(2)?;
    let mut prev: Option<f64> = None;
    println!("{:>6} {:>9} {:>12} {:>12} {:>6}", "h", "nodes", "max error", "bound", "ratio");
    for h in [0.2, 0.1, 0.05, 0.025] {
        let mesh = build_mesh(std::slice::from_ref(&disk), h, 0.5 * h)?;
        let v = NodalVector::from_fn(&mesh, f);
        let mut worst: f64 = 0.0;
        for p in &samples {
            let loc = mesh.locate(p, 0)?;
            worst = worst.max((mesh.interpolate(&v, &loc) - f(p)).abs());
        }
        // second derivatives of |x|^2 are bounded by 2
        let bound = 2.0 * c_bh * mesh.h_max * mesh.h_max * 2.0;
        let ratio = prev.map_or(String::new(), |p| format!("{:.2}", p / worst));
        println!("{h:>6} {:>9} {worst:>12.4e} {bound:>12.4e} {ratio:>6}", mesh.node_count());
        prev = Some(worst);
    }
    Ok(())
}
