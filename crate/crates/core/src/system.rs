//! Graph-directed systems of conformal maps: vertices, alphabets, tails and
//! numerical sanity checks.

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Region};
use crate::maps::{compose, ConformalMap};

/// Membership filter for lattice continued-fraction alphabets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeFilter {
    All,
    GaussianPrimes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AlphabetKind {
    Finite,
    LatticeCf { dim: usize, truncation_radius: f64, filter: LatticeFilter },
    Apollonian { k_set: Vec<u8>, n_max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailKind {
    /// Integral comparison over the omitted lattice points `|e| >= R + 2`.
    CfIntegral { dim: usize },
    /// Geometric decay of the omitted Apollonian maps `n > N`.
    ApollonianGeometric { k_set: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailDescriptor {
    pub kind: TailKind,
    /// `R` for lattice alphabets, `N` for Apollonian ones.
    pub truncation: f64,
}

impl TailDescriptor {
    /// Infimum of the exponents for which the omitted sum converges.
    pub fn admissibility_threshold(&self) -> f64 {
        match &self.kind {
            TailKind::CfIntegral { dim } => *dim as f64 / 2.0,
            TailKind::ApollonianGeometric { .. } => 0.5,
        }
    }

    pub fn admits(&self, t: f64) -> bool {
        t > self.admissibility_threshold()
    }
}

/// A truncated (finite) enumeration of the edge maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    pub kind: AlphabetKind,
    pub maps: Vec<ConformalMap>,
    pub tail: Option<TailDescriptor>,
    /// Word length used for the contraction check; 2 for continued-fraction
    /// alphabets, whose first generator is not a strict contraction at 0.
    pub contraction_word_length: usize,
}

impl Alphabet {
    pub fn finite(maps: Vec<ConformalMap>) -> Self {
        Self { kind: AlphabetKind::Finite, maps, tail: None, contraction_word_length: 1 }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexRegions {
    pub x: Region,
    pub w: Region,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    pub dim: usize,
    pub vertices: Vec<VertexRegions>,
    pub alphabet: Alphabet,
}

impl SystemSpec {
    /// Smallest distance from a vertex region to the boundary of its extension domain.
    pub fn eta(&self) -> f64 {
        self.vertices.iter().map(|v| v.x.distance_to_boundary_of(&v.w)).fold(f64::INFINITY, f64::min)
    }

    pub fn x_regions(&self) -> Vec<Region> {
        self.vertices.iter().map(|v| v.x).collect()
    }

    /// Maps leaving the given vertex, in alphabet order.
    pub fn maps_from(&self, vertex: usize) -> impl Iterator<Item = (usize, &ConformalMap)> {
        self.alphabet.maps.iter().enumerate().filter(move |(_, m)| m.source == vertex)
    }

    /// Composition is admissible exactly when `first` lands where `second` starts.
    pub fn admissible(first: &ConformalMap, second: &ConformalMap) -> bool {
        first.target == second.source
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Positive when the check holds with room to spare.
    pub worst_margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, worst_margin: f64, detail: String) {
        self.checks.push(CheckResult { name: name.to_string(), passed, worst_margin, detail });
    }
}

const GEOMETRY_TOL: f64 = 1e-9;

/// Numerical spot checks of the structural assumptions: incidence, disjoint
/// vertex regions, inclusion of images, open set condition, contraction.
/// Failures are reported, never raised.
pub fn validate_system(spec: &SystemSpec, samples_per_region: usize) -> ValidationReport {
    validate_system_seeded(spec, samples_per_region, 0)
}

/// [`validate_system`] with the sample sequences shifted by `seed`.
pub fn validate_system_seeded(spec: &SystemSpec, samples_per_region: usize, seed: u64) -> ValidationReport {
    assert!(samples_per_region >= 10, "need at least 10 samples per region");
    let mut report = ValidationReport::default();
    let nv = spec.vertices.len();

    let bad_incidence = spec.alphabet.maps.iter().position(|m| m.source >= nv || m.target >= nv);
    report.push(
        "incidence",
        bad_incidence.is_none(),
        if bad_incidence.is_none() { 1.0 } else { -1.0 },
        bad_incidence.map(|i| format!("map {i} references a missing vertex")).unwrap_or_default(),
    );
    if bad_incidence.is_some() {
        return report;
    }

    let mut region_gap = f64::INFINITY;
    for i in 0..nv {
        let xi = &spec.vertices[i].x;
        let wi = &spec.vertices[i].w;
        region_gap = region_gap.min(xi.distance_to_boundary_of(wi));
        for j in i + 1..nv {
            let xj = &spec.vertices[j].x;
            region_gap = region_gap.min(xi.center().dist(&xj.center()) - xi.radius() - xj.radius());
        }
    }
    report.push("regions", region_gap > 0.0, region_gap, String::new());

    let samples: Vec<Vec<Point>> =
        spec.vertices.iter().enumerate().map(|(v, r)| r.x.samples(samples_per_region, seed.wrapping_add(v as u64))).collect();

    // images stay inside the target region
    let mut worst = f64::INFINITY;
    let mut worst_map = 0;
    let mut failure = None;
    for (idx, m) in spec.alphabet.maps.iter().enumerate() {
        let target = &spec.vertices[m.target].x;
        let src = &spec.vertices[m.source].x;
        let mut margin = f64::INFINITY;
        if let Some(ball) = m.image_ball(&src.center(), src.radius()) {
            margin = margin.min(target.radius() - ball.center.dist(&target.center()) - ball.radius);
        }
        for p in &samples[m.source] {
            match m.apply(p) {
                Ok(q) => margin = margin.min(-target.signed_distance(&q)),
                Err(e) => {
                    failure.get_or_insert(format!("map {idx}: {e}"));
                    margin = f64::NEG_INFINITY;
                }
            }
        }
        if margin < worst {
            worst = margin;
            worst_map = idx;
        }
    }
    let detail = failure.unwrap_or_else(|| format!("tightest map {worst_map}"));
    report.push("inclusion", worst >= -GEOMETRY_TOL, worst, detail);

    let (osc_margin, osc_detail) = open_set_margin(spec);
    report.push("open-set", osc_margin >= -GEOMETRY_TOL, osc_margin, osc_detail);

    let (contraction, detail) = contraction_margin(spec, samples_per_region, seed);
    report.push("contraction", contraction > 0.0, contraction, detail);

    report
}

/// Minimum gap between the images of distinct maps with a common target,
/// using image balls; negative values mean overlap.
fn open_set_margin(spec: &SystemSpec) -> (f64, String) {
    let mut balls: Vec<(usize, usize, Point, f64)> = Vec::with_capacity(spec.alphabet.len());
    let mut unavailable = 0;
    for (idx, m) in spec.alphabet.maps.iter().enumerate() {
        let src = &spec.vertices[m.source].x;
        match m.image_ball(&src.center(), src.radius()) {
            Some(b) => balls.push((m.target, idx, b.center, b.radius)),
            None => unavailable += 1,
        }
    }
    // sweep along the first coordinate
    balls.sort_by(|a, b| (a.0, a.2.x() - a.3).partial_cmp(&(b.0, b.2.x() - b.3)).unwrap());
    let mut worst = f64::INFINITY;
    let mut pair = (0, 0);
    for i in 0..balls.len() {
        let (vi, ii, ci, ri) = balls[i];
        for &(vj, ij, cj, rj) in &balls[i + 1..] {
            if vj != vi || cj.x() - rj > ci.x() + ri + worst.max(0.0) {
                break;
            }
            let gap = ci.dist(&cj) - ri - rj;
            if gap < worst {
                worst = gap;
                pair = (ii, ij);
            }
        }
    }
    if balls.len() < 2 {
        worst = 1.0;
    }
    let mut detail = format!("closest pair ({}, {})", pair.0, pair.1);
    if unavailable > 0 {
        detail.push_str(&format!("; {unavailable} maps without image balls skipped"));
    }
    (worst, detail)
}

/// `1 - sup ||D phi_w||` over sampled points of slightly dilated regions,
/// for words `w` of the alphabet's contraction word length.
fn contraction_margin(spec: &SystemSpec, samples_per_region: usize, seed: u64) -> (f64, String) {
    let eta = spec.eta();
    let pad = (eta / 4.0).min(0.1);
    let dilated: Vec<Vec<Point>> = spec
        .vertices
        .iter()
        .enumerate()
        .map(|(v, r)| r.x.dilated(pad).samples(samples_per_region, seed.wrapping_add(1000 + v as u64)))
        .collect();

    let sup_on = |m: &ConformalMap| -> f64 {
        dilated[m.source].iter().map(|p| m.derivative_norm(p).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    };
    let per_map: Vec<f64> = spec.alphabet.maps.iter().map(sup_on).collect();

    if spec.alphabet.contraction_word_length <= 1 {
        let (idx, worst) = per_map.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        return (1.0 - worst, format!("largest derivative at map {idx}"));
    }

    // Products of single-map suprema bound the word derivative; only pairs
    // where that bound fails are sampled directly.
    let mut worst: f64 = 0.0;
    let mut word = (0, 0);
    let maps = &spec.alphabet.maps;
    let mut order: Vec<usize> = (0..maps.len()).collect();
    order.sort_by(|&i, &j| per_map[j].partial_cmp(&per_map[i]).unwrap());
    let max_single = per_map[order[0]];
    for &a in &order {
        if per_map[a] * max_single <= worst {
            break;
        }
        let ma = &maps[a];
        for &b in &order {
            let bound = per_map[a] * per_map[b];
            if bound <= worst {
                break;
            }
            let mb = &maps[b];
            if !SystemSpec::admissible(mb, ma) {
                continue;
            }
            if bound < 1.0 - 1e-3 {
                worst = bound;
                word = (a, b);
                break;
            }
            let w = compose(&[ma.clone(), mb.clone()]).expect("admissible pair");
            let s = sup_on(&w);
            if s > worst {
                worst = s;
                word = (a, b);
            }
        }
    }
    (1.0 - worst, format!("largest two-letter derivative at word ({}, {})", word.0, word.1))
}

/// The exponent `t` with `sum r_i^t = 1`.
pub fn hutchinson_dimension(ratios: &[f64]) -> f64 {
    assert!(!ratios.is_empty(), "need at least one ratio");
    assert!(ratios.iter().all(|&r| r > 0.0 && r < 1.0), "ratios must lie in (0, 1)");
    let pressure = |t: f64| ratios.iter().map(|r| r.powf(t)).sum::<f64>() - 1.0;
    let rmax = ratios.iter().cloned().fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = (ratios.len() as f64).ln() / (1.0 / rmax).ln() + 1e-9;
    while pressure(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pressure(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hutchinson_closed_forms() {
        assert!((hutchinson_dimension(&[1.0 / 3.0; 3]) - 1.0).abs() < 1e-13);
        assert!((hutchinson_dimension(&[0.5, 0.5]) - 1.0).abs() < 1e-13);
        let t = hutchinson_dimension(&[0.25; 3]);
        assert!((t - 3f64.ln() / 4f64.ln()).abs() < 1e-13);
        assert!((t - 0.79248125).abs() < 1e-8);
    }

    #[test]
    fn hutchinson_residual_is_tiny() {
        let ratios = [0.21, 0.33, 0.47, 0.58];
        let t = hutchinson_dimension(&ratios);
        let s: f64 = ratios.iter().map(|r| r.powf(t)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_thresholds() {
        let cf = TailDescriptor { kind: TailKind::CfIntegral { dim: 3 }, truncation: 30.0 };
        assert!(!cf.admits(1.5));
        assert!(cf.admits(1.5001));
        let ap = TailDescriptor { kind: TailKind::ApollonianGeometric { k_set: vec![1, 3, 5] }, truncation: 50.0 };
        assert_eq!(ap.admissibility_threshold(), 0.5);
    }
}
