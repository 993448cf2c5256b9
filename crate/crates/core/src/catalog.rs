//! Built-in example systems: continued fractions, the quadratic abc system,
//! Schottky groups, the Apollonian gasket and similitude test systems.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::ConstantMethod;
use crate::error::{Error, Result};
use crate::geometry::{Point, Region};
use crate::maps::ConformalMap;
use crate::system::{Alphabet, AlphabetKind, LatticeFilter, SystemSpec, TailDescriptor, TailKind, VertexRegions};

/// Generator choice for continued-fraction systems.
#[derive(Clone, Debug, PartialEq)]
pub enum CfGenerators {
    /// Explicit lattice vectors with positive first coordinate.
    Finite(Vec<Vec<i64>>),
    /// `N x Z^{n-1}` truncated at radius `R`.
    FullLattice(f64),
    /// Gaussian primes with positive real part, truncated at radius `R`.
    GaussianPrimes(f64),
}

fn complex(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit_vector(n: usize) -> Point {
    let mut v = Point::origin(n);
    v.coords[0] = 1.0;
    v
}

/// `phi_e(x) = (x + e) / |x + e|^2` on `X = B(v/2, 1/2)`, `W = B(v/2, 3/2)`.
pub fn cf_system(n: usize, generators: CfGenerators) -> Result<SystemSpec> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let half = unit_vector(n).scale(0.5);
    let x = Region::ball(half, 0.5, 0);
    let w = Region::ball(half, 1.5, 0);

    let (vectors, kind, tail, name) = match &generators {
        CfGenerators::Finite(list) => {
            for e in list {
                if e.len() != n || e[0] < 1 {
                    return Err(Error::Range(format!("generator {e:?} is not in N x Z^{}", n - 1)));
                }
            }
            (list.clone(), AlphabetKind::Finite, None, format!("cf{n}-finite"))
        }
        CfGenerators::FullLattice(r) => {
            check_radius(*r)?;
            (
                lattice_vectors(n, r + 2.0),
                AlphabetKind::LatticeCf { dim: n, truncation_radius: *r, filter: LatticeFilter::All },
                Some(TailDescriptor { kind: TailKind::CfIntegral { dim: n }, truncation: *r }),
                format!("cf{n}-lattice"),
            )
        }
        CfGenerators::GaussianPrimes(r) => {
            if n != 2 {
                return Err(Error::Range("Gaussian primes live in the plane".into()));
            }
            check_radius(*r)?;
            let list = lattice_vectors(2, r + 2.0).into_iter().filter(|e| is_gaussian_prime(e[0], e[1])).collect();
            (
                list,
                AlphabetKind::LatticeCf { dim: 2, truncation_radius: *r, filter: LatticeFilter::GaussianPrimes },
                Some(TailDescriptor { kind: TailKind::CfIntegral { dim: 2 }, truncation: *r }),
                "cf2-gauss-primes".to_string(),
            )
        }
    };

    let zero = Point::origin(n);
    let maps = vectors
        .iter()
        .map(|e| {
            let shift = Point::from_slice(&e.iter().map(|&v| v as f64).collect::<Vec<_>>());
            ConformalMap::inversion_general(zero, 1.0, shift, zero, crate::maps::IDENTITY3, 0, 0).with_domain(w)
        })
        .collect();
    Ok(SystemSpec {
        name,
        dim: n,
        vertices: vec![VertexRegions { x, w }],
        alphabet: Alphabet { kind, maps, tail, contraction_word_length: 2 },
    })
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Range(format!("truncation radius {r} must be at least 1")));
    }
    Ok(())
}

/// Lattice vectors of `N x Z^{n-1}` with norm at most `radius`, ordered by
/// norm and then lexicographically.
pub fn lattice_vectors(n: usize, radius: f64) -> Vec<Vec<i64>> {
    let m = radius.floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    for a in 1..=m {
        for b in -m..=m {
            if n == 2 {
                if ((a * a + b * b) as f64) <= r2 {
                    out.push(vec![a, b]);
                }
                continue;
            }
            for c in -m..=m {
                if ((a * a + b * b + c * c) as f64) <= r2 {
                    out.push(vec![a, b, c]);
                }
            }
        }
    }
    out.sort_by_key(|e| (e.iter().map(|v| v * v).sum::<i64>(), e.clone()));
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Primality of `a + bi` in the Gaussian integers.
pub fn is_gaussian_prime(a: i64, b: i64) -> bool {
    let (a, b) = (a.unsigned_abs(), b.unsigned_abs());
    match (a, b) {
        (0, 0) => false,
        (p, 0) | (0, p) => is_prime(p) && p % 4 == 3,
        _ => is_prime(a * a + b * b),
    }
}

/// The quadratic maps `a z + b + c z^2` on `X = B(0, 0.2)`, `W = B(0, 1.2)`.
pub fn abc_system() -> SystemSpec {
    let x = Region::ball(Point::new2(0.0, 0.0), 0.2, 0);
    let w = Region::ball(Point::new2(0.0, 0.0), 1.2, 0);
    let coeffs = [
        (complex(0.0, 0.25), complex(0.1, 0.0), complex(0.1, 0.0)),
        (complex(0.0, 0.2), complex(-0.1, -0.1), complex(0.05, 0.0)),
        (complex(0.1, 0.0), complex(0.1, -0.1), complex(0.04, 0.0)),
    ];
    let maps = coeffs.iter().map(|&(a, b, c)| ConformalMap::polynomial(a, b, c, 0, 0).with_domain(w)).collect();
    SystemSpec {
        name: "abc".into(),
        dim: 2,
        vertices: vec![VertexRegions { x, w }],
        alphabet: Alphabet::finite(maps),
    }
}

/// Centers of the three Schottky disks of radius `1/sqrt 3`.
pub fn schottky2d_centers() -> [Complex64; 3] {
    let s3 = 3f64.sqrt();
    [complex(2.0 / s3, 0.0), complex(-1.0 / s3, 1.0), complex(-1.0 / s3, -1.0)]
}

/// Three disks with generators `g_j(z) = c_j + w_j / (3 (z - c_j))`; the edge
/// `g_{j,i}` maps disk `i` into disk `j` for `i != j`.
pub fn schottky2d_system() -> SystemSpec {
    let s3 = 3f64.sqrt();
    let r = 1.0 / s3;
    let eta = 2.0 - 2.0 / s3;
    let centers = schottky2d_centers();
    let rotations = [complex(1.0, 0.0), Complex64::from_polar(1.0, -2.0 * PI / 3.0), Complex64::from_polar(1.0, 2.0 * PI / 3.0)];
    let vertices: Vec<VertexRegions> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = Point::new2(c.re, c.im);
            VertexRegions { x: Region::ball(p, r, i), w: Region::ball(p, r + eta, i) }
        })
        .collect();
    let mut maps = Vec::new();
    for j in 0..3 {
        let c = centers[j];
        let matrix = [c, rotations[j] / 3.0 - c * c, complex(1.0, 0.0), -c];
        for i in (0..3).filter(|&i| i != j) {
            maps.push(ConformalMap::mobius(matrix, false, i, j).with_domain(vertices[i].w));
        }
    }
    SystemSpec { name: "schottky2d".into(), dim: 2, vertices, alphabet: Alphabet::finite(maps) }
}

/// Centers `alpha (+-1, +-1, +-1)` with an even number of minus signs.
pub fn schottky3d_centers() -> [Point; 4] {
    let a = 0.75;
    [Point::new3(a, a, a), Point::new3(a, -a, -a), Point::new3(-a, a, -a), Point::new3(-a, -a, a)]
}

/// Four balls of radius 1/2 with inversions `g_j` in their boundary spheres.
pub fn schottky3d_system() -> SystemSpec {
    let r = 0.5;
    let eta = 1.5 * 2f64.sqrt() - 1.0;
    let centers = schottky3d_centers();
    let vertices: Vec<VertexRegions> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| VertexRegions { x: Region::ball(*c, r, i), w: Region::ball(*c, r + eta, i) })
        .collect();
    let mut maps = Vec::new();
    for j in 0..4 {
        for i in (0..4).filter(|&i| i != j) {
            maps.push(ConformalMap::inversion(centers[j], r, i, j).with_domain(vertices[i].w));
        }
    }
    SystemSpec { name: "schottky3d".into(), dim: 3, vertices, alphabet: Alphabet::finite(maps) }
}

pub const APOLLONIAN_LAMBDA: f64 = 1.7320508075688772;

type Mat2 = [Complex64; 4];

fn mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn rotation(theta: f64) -> Mat2 {
    [Complex64::from_polar(1.0, theta), complex(0.0, 0.0), complex(0.0, 0.0), complex(1.0, 0.0)]
}

/// The generator `f(z) = ((lambda - 1) z + 1) / (-z + lambda + 1)`.
pub fn apollonian_f() -> Mat2 {
    let l = APOLLONIAN_LAMBDA;
    [complex(l - 1.0, 0.0), complex(1.0, 0.0), complex(-1.0, 0.0), complex(l + 1.0, 0.0)]
}

/// `f^n / lambda^n = P T_n P^{-1}` with `T_n` the translation by `n / lambda`.
pub fn apollonian_power_normalized(n: u32) -> Mat2 {
    let q = n as f64 / APOLLONIAN_LAMBDA;
    let p = [complex(-1.0, 0.0), complex(1.0, 0.0), complex(-1.0, 0.0), complex(0.0, 0.0)];
    let t = [complex(1.0, 0.0), complex(q, 0.0), complex(0.0, 0.0), complex(1.0, 0.0)];
    let p_inv = [complex(0.0, 0.0), complex(-1.0, 0.0), complex(1.0, 0.0), complex(-1.0, 0.0)];
    mul(&mul(&p, &t), &p_inv)
}

/// Rotation angles `(theta_k, theta'_k)` for `k = 1..6`.
pub fn apollonian_angles(k: u8) -> (f64, f64) {
    let theta = if k % 2 == 0 { 2.0 * PI / 3.0 } else { -2.0 * PI / 3.0 };
    let theta_prime = (2.0 * PI * k as f64 / 3.0) % (2.0 * PI);
    (theta, theta_prime)
}

/// Matrix of `phi_{k,n} = R_{theta'_k} o f^n o R_{theta_k} o f`, up to the
/// scalar `lambda^n`.
pub fn apollonian_matrix(k: u8, n: u32) -> Mat2 {
    let (theta, theta_prime) = apollonian_angles(k);
    let m = mul(&rotation(theta_prime), &apollonian_power_normalized(n));
    mul(&mul(&m, &rotation(theta)), &apollonian_f())
}

/// Range of the index `n` in the Apollonian alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApollonianRange {
    /// Every `n >= 1`; maps with `n <= N` are kept and the rest bounded by a tail.
    All(usize),
    /// Exactly `n = 1..=n_max`.
    Finite(usize),
}

/// Maps `phi_{k,n}` for `k` in `k_set`, enumerated `n`-major, on the unit disk
/// with `W = B(0, 1 + sqrt 3)`.
pub fn apollonian_system(k_set: &[u8], range: ApollonianRange) -> Result<SystemSpec> {
    if k_set.is_empty() || k_set.iter().any(|&k| !(1..=6).contains(&k)) {
        return Err(Error::Range(format!("k_set {k_set:?} must be a nonempty subset of 1..=6")));
    }
    let (n_max, tail) = match range {
        ApollonianRange::All(n) => {
            (n, Some(TailDescriptor { kind: TailKind::ApollonianGeometric { k_set: k_set.to_vec() }, truncation: n as f64 }))
        }
        ApollonianRange::Finite(n) => (n, None),
    };
    if n_max < 1 {
        return Err(Error::Range("need at least n = 1".into()));
    }
    let origin = Point::new2(0.0, 0.0);
    let x = Region::ball(origin, 1.0, 0);
    let w = Region::ball(origin, 1.0 + APOLLONIAN_LAMBDA, 0);
    let mut maps = Vec::with_capacity(n_max * k_set.len());
    for n in 1..=n_max as u32 {
        for &k in k_set {
            maps.push(ConformalMap::mobius(apollonian_matrix(k, n), false, 0, 0).with_domain(w));
        }
    }
    let kind = match tail {
        Some(_) => AlphabetKind::Apollonian { k_set: k_set.to_vec(), n_max },
        None => AlphabetKind::Finite,
    };
    let name = match (k_set.len(), range) {
        (6, ApollonianRange::All(_)) => "apollonian".to_string(),
        (6, ApollonianRange::Finite(2)) => "apollonian-12".to_string(),
        _ if k_set == [1, 3, 5] && matches!(range, ApollonianRange::All(_)) => "apollonian-odd".to_string(),
        _ => format!("apollonian-k{k_set:?}"),
    };
    Ok(SystemSpec {
        name,
        dim: 2,
        vertices: vec![VertexRegions { x, w }],
        alphabet: Alphabet { kind, maps, tail, contraction_word_length: 1 },
    })
}

/// Analyticity margin used for similitude systems; the maps are entire.
pub const SIMILITUDE_ETA: f64 = 50.0;

/// Planar similitudes `x -> r_i x + c_i` of the unit disk; `c_i` is the
/// center of the image disk.
pub fn similitude_system(ratios: &[f64], centers: &[Point]) -> Result<SystemSpec> {
    if ratios.len() != centers.len() || ratios.is_empty() {
        return Err(Error::Range("need one center per ratio".into()));
    }
    if let Some(c) = centers.iter().find(|c| c.dim() != 2) {
        return Err(Error::UnsupportedDimension(c.dim()));
    }
    for (i, (&r, c)) in ratios.iter().zip(centers).enumerate() {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Range(format!("ratio {r} of map {i} outside (0, 1)")));
        }
        if c.norm() + r > 1.0 + 1e-12 {
            return Err(Error::Range(format!("image of map {i} leaves the unit disk")));
        }
    }
    for i in 0..ratios.len() {
        for j in i + 1..ratios.len() {
            if centers[i].dist(&centers[j]) < ratios[i] + ratios[j] - 1e-12 {
                return Err(Error::Overlap { first: i, second: j });
            }
        }
    }
    let origin = Point::new2(0.0, 0.0);
    let x = Region::ball(origin, 1.0, 0);
    let w = Region::ball(origin, 1.0 + SIMILITUDE_ETA, 0);
    let maps = ratios
        .iter()
        .zip(centers)
        .map(|(&r, c)| {
            let m = [complex(r, 0.0), complex(c.x(), c.y()), complex(0.0, 0.0), complex(1.0, 0.0)];
            ConformalMap::mobius(m, false, 0, 0).with_domain(w)
        })
        .collect();
    Ok(SystemSpec {
        name: format!("similitude-{}", ratios.len()),
        dim: 2,
        vertices: vec![VertexRegions { x, w }],
        alphabet: Alphabet::finite(maps),
    })
}

/// Named example with its published estimate and solver hints.
#[derive(Clone, Copy, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub dim: usize,
    pub eta: f64,
    /// Upper bound for the dimension used to evaluate derivative constants.
    pub t_upper_hint: f64,
    /// Published central value and radius.
    pub table_value: f64,
    pub table_radius: f64,
    pub method: ConstantMethod,
    /// Default `R` or `N` for infinite alphabets.
    pub default_truncation: Option<f64>,
    builder: fn(Option<f64>) -> Result<SystemSpec>,
}

impl CatalogEntry {
    pub fn build(&self, truncation: Option<f64>) -> Result<SystemSpec> {
        (self.builder)(truncation.or(self.default_truncation))
    }

    pub fn is_infinite(&self) -> bool {
        self.default_truncation.is_some()
    }

    pub fn table_interval(&self) -> (f64, f64) {
        (self.table_value - self.table_radius, self.table_value + self.table_radius)
    }

    /// Starting bracket for the solver: the published value widened by 10%.
    pub fn hint(&self) -> (f64, f64) {
        (0.9 * self.table_value, 1.1 * self.table_value)
    }
}

fn truncation_index(t: Option<f64>) -> Result<usize> {
    let v = t.ok_or_else(|| Error::Config("truncation required".into()))?;
    if !(v >= 1.0 && v.is_finite()) {
        return Err(Error::Config(format!("truncation {v} must be at least 1")));
    }
    Ok(v.round() as usize)
}

fn radius(t: Option<f64>) -> Result<f64> {
    t.ok_or_else(|| Error::Config("truncation radius required".into()))
}

fn named(mut spec: SystemSpec, name: &str) -> SystemSpec {
    spec.name = name.to_string();
    spec
}

pub fn e4() -> Vec<Vec<i64>> {
    vec![vec![1, 0], vec![1, 1], vec![1, -1], vec![2, 0]]
}

pub fn e5() -> Vec<Vec<i64>> {
    vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, -1, 0], vec![1, 0, 1], vec![1, 0, -1]]
}

const SQRT3: f64 = 1.7320508075688772;

pub static CATALOG: [CatalogEntry; 11] = [
    CatalogEntry {
        name: "cf2-4gen",
        description: "complex continued fractions with generators 1, 1+i, 1-i, 2",
        dim: 2,
        eta: 1.0,
        t_upper_hint: 1.15,
        table_value: 1.149576,
        table_radius: 5.5e-6,
        method: ConstantMethod::Mobius,
        default_truncation: None,
        builder: |_| cf_system(2, CfGenerators::Finite(e4())).map(|s| named(s, "cf2-4gen")),
    },
    CatalogEntry {
        name: "cf2-lattice",
        description: "complex continued fractions over N x Z",
        dim: 2,
        eta: 1.0,
        t_upper_hint: 1.86,
        table_value: 1.853,
        table_radius: 4.2e-3,
        method: ConstantMethod::Mobius,
        default_truncation: Some(100.0),
        builder: |t| cf_system(2, CfGenerators::FullLattice(radius(t)?)),
    },
    CatalogEntry {
        name: "cf2-gauss-primes",
        description: "complex continued fractions over Gaussian primes with positive real part",
        dim: 2,
        eta: 1.0,
        t_upper_hint: 1.515,
        table_value: 1.510,
        table_radius: 4.0e-3,
        method: ConstantMethod::Mobius,
        default_truncation: Some(100.0),
        builder: |t| cf_system(2, CfGenerators::GaussianPrimes(radius(t)?)),
    },
    CatalogEntry {
        name: "cf3-5gen",
        description: "three-dimensional continued fractions with five generators",
        dim: 3,
        eta: 1.0,
        t_upper_hint: 1.46,
        table_value: 1.452,
        table_radius: 9.7e-3,
        method: ConstantMethod::Mobius,
        default_truncation: None,
        builder: |_| cf_system(3, CfGenerators::Finite(e5())).map(|s| named(s, "cf3-5gen")),
    },
    CatalogEntry {
        name: "cf3-lattice",
        description: "three-dimensional continued fractions over N x Z^2",
        dim: 3,
        eta: 1.0,
        t_upper_hint: 2.6,
        table_value: 2.57,
        table_radius: 1.7e-2,
        method: ConstantMethod::Mobius,
        default_truncation: Some(30.0),
        builder: |t| cf_system(3, CfGenerators::FullLattice(radius(t)?)),
    },
    CatalogEntry {
        name: "abc",
        description: "three quadratic perturbations of linear maps",
        dim: 2,
        eta: 1.0,
        t_upper_hint: 0.633,
        table_value: 0.631822790,
        table_radius: 1.4e-8,
        method: ConstantMethod::Analytic2d,
        default_truncation: None,
        builder: |_| Ok(abc_system()),
    },
    CatalogEntry {
        name: "schottky2d",
        description: "classical Schottky group on three disks",
        dim: 2,
        eta: 2.0 - 2.0 / SQRT3,
        t_upper_hint: 0.3,
        table_value: 0.295546,
        table_radius: 6.3e-6,
        method: ConstantMethod::Mobius,
        default_truncation: None,
        builder: |_| Ok(schottky2d_system()),
    },
    CatalogEntry {
        name: "schottky3d",
        description: "Schottky group on four balls in space",
        dim: 3,
        eta: 1.5 * std::f64::consts::SQRT_2 - 1.0,
        t_upper_hint: 0.825,
        table_value: 0.823,
        table_radius: 1.8e-3,
        method: ConstantMethod::Mobius,
        default_truncation: None,
        builder: |_| Ok(schottky3d_system()),
    },
    CatalogEntry {
        name: "apollonian",
        description: "Apollonian gasket, all six branches",
        dim: 2,
        eta: SQRT3,
        t_upper_hint: 1.306,
        table_value: 1.30563,
        table_radius: 2.3e-4,
        method: ConstantMethod::Mobius,
        default_truncation: Some(200.0),
        builder: |t| apollonian_system(&[1, 2, 3, 4, 5, 6], ApollonianRange::All(truncation_index(t)?)),
    },
    CatalogEntry {
        name: "apollonian-12",
        description: "first twelve Apollonian maps, n = 1, 2",
        dim: 2,
        eta: SQRT3,
        t_upper_hint: 1.115,
        table_value: 1.11405706,
        table_radius: 9.2e-6,
        method: ConstantMethod::Mobius,
        default_truncation: None,
        builder: |_| apollonian_system(&[1, 2, 3, 4, 5, 6], ApollonianRange::Finite(2)),
    },
    CatalogEntry {
        name: "apollonian-odd",
        description: "Apollonian gasket restricted to the odd branches",
        dim: 2,
        eta: SQRT3,
        t_upper_hint: 1.08,
        table_value: 1.07281,
        table_radius: 1.2e-4,
        method: ConstantMethod::Mobius,
        default_truncation: Some(200.0),
        builder: |t| apollonian_system(&[1, 3, 5], ApollonianRange::All(truncation_index(t)?)),
    },
];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}

pub fn lookup(name: &str) -> Result<&'static CatalogEntry> {
    CATALOG
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Config(format!("unknown system '{name}'; available: {}", catalog_names().join(", "))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{hutchinson_dimension, validate_system};

    fn eval_mat(m: &Mat2, z: Complex64) -> Complex64 {
        (m[0] * z + m[1]) / (m[2] * z + m[3])
    }

    #[test]
    fn finite_cf_alphabets() {
        assert_eq!(cf_system(2, CfGenerators::Finite(e4())).unwrap().alphabet.len(), 4);
        assert_eq!(cf_system(3, CfGenerators::Finite(e5())).unwrap().alphabet.len(), 5);
        assert!(cf_system(2, CfGenerators::Finite(vec![vec![0, 1]])).is_err());
        assert!(matches!(cf_system(4, CfGenerators::FullLattice(5.0)), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn cf_map_values() {
        let spec = cf_system(2, CfGenerators::Finite(vec![vec![1, 1]])).unwrap();
        let (y, d) = spec.alphabet.maps[0].eval(&Point::new2(0.0, 0.0)).unwrap();
        assert!((y.x() - 0.5).abs() < 1e-15 && (y.y() - 0.5).abs() < 1e-15);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_prime_examples() {
        assert!(is_gaussian_prime(1, 1));
        assert!(is_gaussian_prime(3, 0));
        assert!(!is_gaussian_prime(2, 0));
        assert!(!is_gaussian_prime(5, 0));
        assert!(is_gaussian_prime(2, 1));
        assert!(is_gaussian_prime(2, -1));
    }

    #[test]
    fn lattice_truncation_stores_radius_plus_two() {
        let spec = cf_system(2, CfGenerators::FullLattice(3.0)).unwrap();
        let count = lattice_vectors(2, 5.0).len();
        assert_eq!(spec.alphabet.len(), count);
        let brute = (1..=5).flat_map(|a| (-5..=5).map(move |b| (a, b))).filter(|(a, b)| a * a + b * b <= 25).count();
        assert_eq!(count, brute);
    }

    #[test]
    fn abc_maps() {
        let spec = abc_system();
        let y = spec.alphabet.maps[0].apply(&Point::new2(0.0, 0.0)).unwrap();
        assert!((y.x() - 0.1).abs() < 1e-15 && y.y().abs() < 1e-15);
        let sup = spec.alphabet.maps[0].sup_derivative(&Point::new2(0.0, 0.0), 0.2).unwrap();
        assert!(sup <= 0.29 + 1e-15);
        // |a| + 2 r |c| = 1 for the first map
        assert!(((1.0 - 0.25) / (2.0 * 0.1) - 3.75f64).abs() < 1e-12);
    }

    #[test]
    fn schottky2d_structure() {
        let spec = schottky2d_system();
        assert_eq!(spec.alphabet.len(), 6);
        assert!(spec.alphabet.maps.iter().all(|m| m.source != m.target));
        assert!((spec.eta() - (2.0 - 2.0 / 3f64.sqrt())).abs() < 1e-12);
        for m in &spec.alphabet.maps {
            let (mat, _) = m.as_mobius().unwrap();
            let det = mat[0] * mat[3] - mat[1] * mat[2];
            assert!((det.norm() - 1.0 / 3.0).abs() < 1e-14);
            let target = spec.vertices[m.target].x;
            for p in spec.vertices[m.source].x.samples(1000, 3) {
                assert!(target.contains(&m.apply(&p).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn schottky3d_separation() {
        let spec = schottky3d_system();
        assert_eq!(spec.alphabet.len(), 12);
        assert!((spec.eta() - 1.1213203435596424).abs() < 1e-12);
        let c = schottky3d_centers();
        assert!((c[0].dist(&c[1]) - 1.0 - 1.121320).abs() < 1e-6);
    }

    #[test]
    fn apollonian_power_determinant() {
        let l = APOLLONIAN_LAMBDA;
        let mut direct = apollonian_f();
        for n in 1..=12u32 {
            let m = apollonian_power_normalized(n);
            let scale = l.powi(n as i32);
            let det = (m[0] * m[3] - m[1] * m[2]) * scale * scale;
            assert!((det.norm() / l.powi(2 * n as i32) - 1.0).abs() < 1e-12);
            for i in 0..4 {
                assert!((m[i] * scale - direct[i]).norm() <= 1e-12 * scale);
            }
            direct = mul(&direct, &apollonian_f());
        }
    }

    #[test]
    fn apollonian_f_image_of_disk() {
        let l = APOLLONIAN_LAMBDA;
        let f = ConformalMap::mobius(apollonian_f(), false, 0, 0);
        let b = f.image_ball(&Point::new2(0.0, 0.0), 1.0).unwrap();
        assert!((b.center.x() - 2.0 / (2.0 + l)).abs() < 1e-14 && b.center.y().abs() < 1e-14);
        assert!((b.radius - l / (2.0 + l)).abs() < 1e-14);
    }

    #[test]
    fn apollonian_matrix_matches_composition() {
        let l = APOLLONIAN_LAMBDA;
        let f = |z: Complex64| ((l - 1.0) * z + 1.0) / (-z + l + 1.0);
        let samples = Region::ball(Point::new2(0.0, 0.0), 1.0, 0).samples(100, 11);
        for k in 1..=6u8 {
            let (theta, theta_prime) = apollonian_angles(k);
            for n in 1..=5u32 {
                let m = apollonian_matrix(k, n);
                for p in &samples {
                    let z = complex(p.x(), p.y());
                    let mut w = Complex64::from_polar(1.0, theta) * f(z);
                    for _ in 0..n {
                        w = f(w);
                    }
                    w *= Complex64::from_polar(1.0, theta_prime);
                    assert!((eval_mat(&m, z) - w).norm() < 1e-12, "k={k} n={n}");
                }
            }
        }
    }

    #[test]
    fn apollonian_subsystem_sizes() {
        assert_eq!(lookup("apollonian-12").unwrap().build(None).unwrap().alphabet.len(), 12);
        assert_eq!(apollonian_system(&[1, 3, 5], ApollonianRange::All(10)).unwrap().alphabet.len(), 30);
        assert!(apollonian_system(&[], ApollonianRange::Finite(2)).is_err());
        assert!(apollonian_system(&[7], ApollonianRange::Finite(2)).is_err());
    }

    #[test]
    fn similitude_checks() {
        let s = similitude_system(&[0.5, 0.5], &[Point::new2(0.5, 0.0), Point::new2(-0.5, 0.0)]).unwrap();
        assert_eq!(s.alphabet.len(), 2);
        let overlap = similitude_system(&[0.5, 0.5], &[Point::new2(0.4, 0.0), Point::new2(-0.4, 0.0)]);
        assert!(matches!(overlap, Err(Error::Overlap { first: 0, second: 1 })));
        assert!((hutchinson_dimension(&[0.5, 0.5]) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn catalog_lookup() {
        assert_eq!(CATALOG.len(), 11);
        assert!(lookup("schottky2d").is_ok());
        let err = lookup("nope").unwrap_err().to_string();
        assert!(err.contains("cf2-4gen") && err.contains("apollonian-odd"));
    }

    #[test]
    fn catalog_eta_matches_built_systems() {
        for e in CATALOG.iter() {
            let truncation = e.default_truncation.map(|_| 5.0);
            let spec = e.build(truncation).unwrap();
            assert!((spec.eta() - e.eta).abs() < 1e-12, "{}", e.name);
            assert_eq!(spec.name, e.name);
            assert_eq!(spec.dim, e.dim);
        }
    }

    #[test]
    fn small_catalog_entries_validate() {
        for name in ["cf2-4gen", "cf3-5gen", "abc", "schottky2d", "schottky3d", "apollonian-12"] {
            let spec = lookup(name).unwrap().build(None).unwrap();
            let report = validate_system(&spec, 1000);
            assert!(report.all_passed(), "{name}: {:?}", report.checks);
        }
    }

    #[test]
    fn infinite_catalog_entries_validate() {
        for (name, truncation) in [("cf2-lattice", 20.0), ("cf2-gauss-primes", 20.0), ("cf3-lattice", 8.0), ("apollonian", 40.0), ("apollonian-odd", 40.0)] {
            let spec = lookup(name).unwrap().build(Some(truncation)).unwrap();
            let report = validate_system(&spec, 1000);
            assert!(report.all_passed(), "{name}: {:?}", report.checks);
        }
    }
}
