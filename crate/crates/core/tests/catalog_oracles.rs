mod common;

use fracdim::catalog::{apollonian_system, cf_system, lookup, ApollonianRange, CfGenerators};
use fracdim::constants::{tail_constant_apollonian, tail_constant_cf};
use fracdim::geometry::Point;

/// Brute-force Gaussian primes: `a + bi` with a nontrivial factorization
/// `(c + di)(e + fi)` into non-units is composite.
fn gaussian_prime_brute(a: i64, b: i64) -> bool {
    let norm = a * a + b * b;
    if norm < 2 {
        return false;
    }
    for c in -norm..=norm {
        for d in -norm..=norm {
            let n = c * c + d * d;
            if n < 2 || n >= norm || norm % n != 0 {
                continue;
            }
            // (a + bi) / (c + di) = (a + bi)(c - di) / n
            let re = a * c + b * d;
            let im = b * c - a * d;
            if re % n == 0 && im % n == 0 {
                return false;
            }
        }
    }
    true
}

#[test]
fn gaussian_prime_alphabet_matches_brute_force() {
    let r = 12.0;
    let spec = cf_system(2, CfGenerators::GaussianPrimes(r)).unwrap();
    let mut expected = Vec::new();
    let m = (r + 2.0) as i64;
    for a in 1..=m {
        for b in -m..=m {
            if ((a * a + b * b) as f64) <= (r + 2.0) * (r + 2.0) && gaussian_prime_brute(a, b) {
                expected.push((a, b));
            }
        }
    }
    assert_eq!(spec.alphabet.maps.len(), expected.len());
    // phi_e(0) = e / |e|^2 recovers e
    let mut got: Vec<(i64, i64)> = spec
        .alphabet
        .maps
        .iter()
        .map(|map| {
            let y = map.apply(&Point::new2(0.0, 0.0)).unwrap();
            let n2 = y.norm_sq();
            ((y.x() / n2).round() as i64, (y.y() / n2).round() as i64)
        })
        .collect();
    got.sort();
    expected.sort();
    assert_eq!(got, expected);
}

#[test]
fn full_lattice_alphabet_size() {
    for r in [3.0, 10.0] {
        let spec = cf_system(2, CfGenerators::FullLattice(r)).unwrap();
        let m = (r + 2.0) as i64;
        let count = (1..=m).flat_map(|a| (-m..=m).map(move |b| (a, b))).filter(|(a, b)| ((a * a + b * b) as f64) <= (r + 2.0).powi(2)).count();
        assert_eq!(spec.alphabet.maps.len(), count);
    }
}

#[test]
fn cf_tail_dominates_lattice_sum() {
    for t in [1.6, 1.8] {
        for r in [10.0, 30.0] {
            let bound = tail_constant_cf(2, t, r, 1.0).unwrap();
            let oracle = common::cf_tail_oracle(t, r, 2000);
            assert!(bound >= oracle, "t {t} R {r}: {bound} < {oracle}");
        }
    }
}

#[test]
fn apollonian_tail_dominates_series() {
    for t in [1.1, 1.3] {
        for n in [50, 200] {
            let bound = tail_constant_apollonian(t, n, 6).unwrap();
            let oracle = common::apollonian_tail_oracle(t, n, 6, 200_000);
            assert!(bound >= oracle, "t {t} N {n}: {bound} < {oracle}");
        }
    }
}

#[test]
fn apollonian_derivatives_decay_like_inverse_square() {
    let spec = apollonian_system(&[1, 2, 3, 4, 5, 6], ApollonianRange::Finite(60)).unwrap();
    let disk = fracdim::Region::ball(Point::new2(0.0, 0.0), 1.0, 0);
    let samples = disk.samples(200, 1);
    for (i, map) in spec.alphabet.maps.iter().enumerate() {
        let n = (i / 6 + 1) as f64;
        for p in &samples {
            let d = map.derivative_norm(p).unwrap();
            assert!(d <= 3.84 / (n * n), "map {i}: {d} at n = {n}");
        }
    }
}

#[test]
fn published_values_lie_in_hint_brackets() {
    for name in fracdim::catalog::catalog_names() {
        let e = lookup(name).unwrap();
        let (lo, hi) = e.hint();
        assert!(lo < e.table_value && e.table_value < hi);
    }
}
