//! Collatz-Wielandt bounds: a crude witness gives a wide bracket, power
//! iteration tightens it, and the bracket always contains the radius.

use fracdim::mesh::NodalVector;
use fracdim::sparse::SparseMatrix;
use fracdim::spectral::{certify_bounds, spectral_radius_interval};

fn main() -> fracdim::Result<()> {
    let rows = vec![
        vec![0.0, 2.0, 0.0, 1.0],
        vec![1.0, 0.0, 3.0, 0.0],
        vec![0.0, 1.0, 0.0, 2.0],
        vec![2.0, 0.0, 1.0, 0.5],
    ];
    let m = SparseMatrix::from_dense(&rows)?;

    let crude = certify_bounds(&m, &NodalVector(vec![1.0; 4]))?;
    println!("ones witness      [{:.12}, {:.12}]", crude.lo, crude.hi);

    for tol in [1e-2, 1e-6, 1e-12] {
        let c = spectral_radius_interval(&m, tol)?;
        println!(
            "tol {tol:<8e}      [{:.12}, {:.12}] after {} iterations",
            c.lo, c.hi, c.iterations
        );
    }
    Ok(())
}
