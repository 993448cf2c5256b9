mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fracdim::assembly::{Discretization, TransferMatrices};
use fracdim::catalog::{similitude_system, SIMILITUDE_ETA};
use fracdim::constants::{ConstantMethod, ErrorBudget};
use fracdim::geometry::Point;
use fracdim::mesh::{build_mesh_for_system, default_delta};
use fracdim::spectral::{spectral_radius_interval, DEFAULT_TOL};

fn system(seed: u64) -> (Vec<f64>, fracdim::SystemSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ratios, centers) = common::random_similitude(&mut rng);
    let centers: Vec<Point> = centers.iter().map(|c| Point::new2(c[0], c[1])).collect();
    let spec = similitude_system(&ratios, &centers).unwrap();
    (ratios, spec)
}

#[test]
fn row_sums_equal_moran_sum() {
    for seed in 0..4 {
        let (ratios, spec) = system(seed);
        let h = 0.1;
        let mesh = build_mesh_for_system(&spec, h, default_delta(SIMILITUDE_ETA, h)).unwrap();
        let disc = Discretization::new(&spec, &mesh).unwrap();
        for t in [0.4, 0.9, 1.3] {
            let k = disc.operator_matrix(t).unwrap();
            let moran: f64 = ratios.iter().map(|r| r.powf(t)).sum();
            for s in k.row_sums() {
                assert!((s / moran - 1.0).abs() < 1e-12, "seed {seed}, t {t}: {s} vs {moran}");
            }
            // constant row sums make the radius exact
            let c = spectral_radius_interval(&k, DEFAULT_TOL).unwrap();
            assert!(c.lo <= moran * (1.0 + 1e-12) && moran <= c.hi * (1.0 + 1e-12));
        }
    }
}

#[test]
fn bounding_matrices_scale_the_operator() {
    let (_, spec) = system(9);
    let h = 0.08;
    let mesh = build_mesh_for_system(&spec, h, default_delta(SIMILITUDE_ETA, h)).unwrap();
    let disc = Discretization::new(&spec, &mesh).unwrap();
    let t = 1.1;
    let budget = ErrorBudget::compute(ConstantMethod::Mobius, 2, t, SIMILITUDE_ETA - mesh.max_offset, mesh.h_max).unwrap();
    let tm = disc.matrices(t, &budget).unwrap();
    let k = disc.operator_matrix(t).unwrap();
    assert!(tm.a.same_pattern(&k) && tm.b.same_pattern(&k));
    let lo = TransferMatrices::lower_factor(tm.err);
    let hi = TransferMatrices::upper_factor(tm.err);
    assert!(lo < 1.0 && hi > 1.0);
    for ((a, b), v) in tm.a.values().iter().zip(tm.b.values()).zip(k.values()) {
        assert_eq!(*a, v * lo);
        assert!((b - v * hi).abs() <= 1e-15 * b.abs());
    }
}
