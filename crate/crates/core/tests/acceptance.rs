//! Acceptance suite: one PASS/FAIL line per criterion, details indented.
//!
//! Runs as a plain binary (`harness = false`). Failing criteria are reported
//! but only turn the exit status nonzero when FRACDIM_ACCEPTANCE_STRICT=1.

mod common;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fracdim::constants::{
    bramble_hilbert_constant, derivative_constant_analytic2d, mobius_scale_free_minimum, tail_constant_apollonian,
    tail_constant_cf,
};
use fracdim::geometry::{Point, Region};
use fracdim::hutchinson_dimension;
use fracdim::mesh::{build_mesh, NodalVector};
use fracdim::record::{run, verify_record, ResultRecord, RunConfig};
use fracdim::sparse::SparseMatrix;
use fracdim::spectral::{spectral_radius_interval, DEFAULT_TOL};
use fracdim::Error;

// similitude oracle
const SIM_SYSTEMS: u64 = 10;
const SIM_H: f64 = 0.02;
const SIM_WIDTH: f64 = 5e-3;
const SIM_SECONDS: f64 = 30.0;

// desk-scale published systems
const DESK_SECONDS: f64 = 300.0;
const CF2_4GEN_H: f64 = 0.00065;
const CF2_4GEN_WIDTH: f64 = 2e-3;
const CF2_4GEN_EXT_H: f64 = 2e-3;
const CF2_4GEN_EXT_WIDTH: f64 = 5e-5;
const ABC_H: f64 = 0.0002;
const ABC_WIDTH: f64 = 1e-3;
const ABC_EXT_WIDTH: f64 = 1e-6;
const SCHOTTKY2D_H: f64 = 0.0013;
const SCHOTTKY2D_WIDTH: f64 = 2e-3;
const APOLLONIAN12_H: f64 = 0.0015;
const APOLLONIAN12_WIDTH: f64 = 2e-3;

// large systems
const CF2_LATTICE_H: f64 = 0.02;
const CF2_LATTICE_R: f64 = 100.0;
const CF2_LATTICE_WIDTH: f64 = 5e-2;
const CF2_LATTICE_SECONDS: f64 = 1800.0;
const CF3_LATTICE_H: f64 = 0.05;
const CF3_LATTICE_R: f64 = 30.0;
const CF3_LATTICE_WIDTH: f64 = 1e-1;
const CF3_LATTICE_SECONDS: f64 = 3600.0;
const GAUSS_H: f64 = 0.003;
const GAUSS_WIDTH: f64 = 5e-2;
const SCHOTTKY3D_H: f64 = 0.05;
const SCHOTTKY3D_WIDTH: f64 = 2e-2;
const APOLLONIAN_H: f64 = 0.01;
const APOLLONIAN_WIDTH: f64 = 5e-3;

// spectral soundness
const SPECTRAL_CASES: usize = 1000;
const SPECTRAL_MAX_N: usize = 200;
const SPECTRAL_REL_TOL: f64 = 1e-9;

// interpolation
const INTERP_H: [f64; 3] = [0.2, 0.1, 0.05];
const INTERP_RATIO: (f64, f64) = (3.2, 4.8);
const INTERP_SAMPLES: usize = 20_000;

// tails
const CF_TAIL_LIMIT: i64 = 10_000;
const APOLLONIAN_TAIL_LIMIT: usize = 10_000_000;

// published constants may be matched or improved by at most this fraction
const CONSTANT_SLACK: f64 = 0.30;

struct Report {
    failures: usize,
}

impl Report {
    fn criterion(&mut self, id: u32, title: &str, pass: bool) {
        println!("{} C{id} {title}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn detail(line: String) {
    println!("    {line}");
}

struct Desk {
    record: Option<ResultRecord>,
    seconds: f64,
    error: Option<Error>,
}

fn desk(name: &str, h: f64, goal: f64, truncation: Option<f64>) -> Desk {
    let mut config = RunConfig::for_system(name, h);
    config.solver.width_goal = Some(goal);
    config.system.truncation = truncation;
    let start = Instant::now();
    let out = run(&config);
    let seconds = start.elapsed().as_secs_f64();
    match out {
        Ok(o) => Desk { record: Some(o.record), seconds, error: None },
        Err(e) => Desk { record: None, seconds, error: Some(e) },
    }
}

/// Checks containment, width and time; prints one detail line.
fn judge(label: &str, d: &Desk, value: f64, width: f64, seconds: f64) -> bool {
    match (&d.record, &d.error) {
        (Some(r), _) => {
            let ok = r.contains(value) && r.width <= width && d.seconds <= seconds;
            detail(format!(
                "{label}: [{:.9}, {:.9}] width {:.3e} (<= {width:.0e}) contains {value}: {} in {:.1} s{}",
                r.t_lo,
                r.t_hi,
                r.width,
                r.contains(value),
                d.seconds,
                if ok { "" } else { "  <- fails" }
            ));
            ok
        }
        (None, Some(e)) => {
            detail(format!("{label}: no interval after {:.1} s: {e}", d.seconds));
            false
        }
        (None, None) => unreachable!(),
    }
}

fn similitude_oracle(rep: &mut Report, records: &mut Vec<ResultRecord>) {
    let mut ok = true;
    for seed in 0..SIM_SYSTEMS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (ratios, centers) = common::random_similitude(&mut rng);
        let exact = hutchinson_dimension(&ratios);
        let mut config = RunConfig::for_similitude(&ratios, &centers, SIM_H);
        config.solver.width_goal = Some(SIM_WIDTH / 2.0);
        let start = Instant::now();
        let out = run(&config);
        let d = match out {
            Ok(o) => Desk { record: Some(o.record), seconds: start.elapsed().as_secs_f64(), error: None },
            Err(e) => Desk { record: None, seconds: start.elapsed().as_secs_f64(), error: Some(e) },
        };
        ok &= judge(&format!("seed {seed}, {} maps", ratios.len()), &d, exact, SIM_WIDTH, SIM_SECONDS);
        records.extend(d.record);
    }
    rep.criterion(1, "similitude oracle", ok);
}

fn desk_systems(rep: &mut Report, records: &mut Vec<ResultRecord>) {
    // one abc run serves both width targets
    let abc = desk("abc", ABC_H, ABC_EXT_WIDTH, None);
    let mut ok = judge("abc", &abc, 0.631822790, ABC_WIDTH, DESK_SECONDS);
    let mut take = |label: &str, d: Desk, value: f64, width: f64| {
        ok &= judge(label, &d, value, width, DESK_SECONDS);
        records.extend(d.record);
    };
    take("cf2-4gen", desk("cf2-4gen", CF2_4GEN_H, CF2_4GEN_WIDTH, None), 1.149576, CF2_4GEN_WIDTH);
    take(
        "cf2-4gen extended",
        desk("cf2-4gen", CF2_4GEN_EXT_H, CF2_4GEN_EXT_WIDTH, None),
        1.149576,
        CF2_4GEN_EXT_WIDTH,
    );
    take("abc extended", abc, 0.631822790, ABC_EXT_WIDTH);
    take("schottky2d", desk("schottky2d", SCHOTTKY2D_H, SCHOTTKY2D_WIDTH, None), 0.295546, SCHOTTKY2D_WIDTH);
    take(
        "apollonian-12",
        desk("apollonian-12", APOLLONIAN12_H, APOLLONIAN12_WIDTH, None),
        1.11405706,
        APOLLONIAN12_WIDTH,
    );
    rep.criterion(2, "published small systems at desk scale", ok);
}

fn large_systems(rep: &mut Report, records: &mut Vec<ResultRecord>) {
    let mut ok = true;
    let mut take = |label: &str, d: Desk, value: f64, width: f64, seconds: f64| {
        ok &= judge(label, &d, value, width, seconds);
        records.extend(d.record);
    };
    take(
        "cf2-lattice",
        desk("cf2-lattice", CF2_LATTICE_H, CF2_LATTICE_WIDTH, Some(CF2_LATTICE_R)),
        1.853,
        CF2_LATTICE_WIDTH,
        CF2_LATTICE_SECONDS,
    );
    take(
        "cf3-lattice",
        desk("cf3-lattice", CF3_LATTICE_H, CF3_LATTICE_WIDTH, Some(CF3_LATTICE_R)),
        2.57,
        CF3_LATTICE_WIDTH,
        CF3_LATTICE_SECONDS,
    );
    take("cf2-gauss-primes", desk("cf2-gauss-primes", GAUSS_H, GAUSS_WIDTH, None), 1.510, GAUSS_WIDTH, f64::INFINITY);
    take("schottky3d", desk("schottky3d", SCHOTTKY3D_H, SCHOTTKY3D_WIDTH, None), 0.823, SCHOTTKY3D_WIDTH, f64::INFINITY);
    take("apollonian", desk("apollonian", APOLLONIAN_H, APOLLONIAN_WIDTH, None), 1.30563, APOLLONIAN_WIDTH, f64::INFINITY);
    take(
        "apollonian-odd",
        desk("apollonian-odd", APOLLONIAN_H, APOLLONIAN_WIDTH, None),
        1.07281,
        APOLLONIAN_WIDTH,
        f64::INFINITY,
    );
    rep.criterion(3, "published large systems at reduced fidelity", ok);
}

fn spectral_soundness(rep: &mut Report) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for case in 0..SPECTRAL_CASES {
        let n = rng.gen_range(1..=SPECTRAL_MAX_N);
        let fill = rng.gen_range(1.0 / n as f64..0.3f64.max(1.0 / n as f64 + 1e-3));
        let m: SparseMatrix = common::random_sparse(&mut rng, n, fill);
        let c = spectral_radius_interval(&m, DEFAULT_TOL).unwrap();
        let rho = common::dense_spectral_radius(&m);
        let tol = SPECTRAL_REL_TOL * rho;
        if !(c.lo <= rho + tol && rho <= c.hi + tol) {
            failures += 1;
            detail(format!("case {case}: n {n}, oracle {rho:e} outside [{:e}, {:e}]", c.lo, c.hi));
        }
        if c.lo > 0.0 {
            worst = worst.max(c.relative_spread());
        }
    }
    detail(format!("{SPECTRAL_CASES} matrices, {failures} outside, widest relative bracket with positive lower end {worst:.2e}"));
    rep.criterion(4, "spectral soundness", failures == 0);
}

fn interpolation(rep: &mut Report) {
    let disk = Region::ball(Point::new2(0.0, 0.0), 1.0, 0);
    let samples = disk.samples(INTERP_SAMPLES, 3);
    let f = |p: &Point| p.norm_sq();
    let c_bh = bramble_hilbert_constant(2).unwrap();
    let mut ok = true;
    let mut prev: Option<f64> = None;
    for h in INTERP_H {
        let mesh = build_mesh(std::slice::from_ref(&disk), h, 0.5 * h).unwrap();
        let v = NodalVector::from_fn(&mesh, f);
        let mut err: f64 = 0.0;
        for p in &samples {
            let loc = mesh.locate(p, 0).unwrap();
            err = err.max((mesh.interpolate(&v, &loc) - f(p)).abs());
        }
        // |f|_{W2,inf} = 2
        let bound = 2.0 * c_bh * mesh.h_max * mesh.h_max * 2.0;
        ok &= err <= bound;
        let ratio = prev.map(|p| p / err);
        if let Some(r) = ratio {
            ok &= (INTERP_RATIO.0..=INTERP_RATIO.1).contains(&r);
        }
        detail(format!(
            "h {h}: max error {err:.4e}, bound {bound:.4e}{}",
            ratio.map_or(String::new(), |r| format!(", ratio {r:.3}"))
        ));
        prev = Some(err);
    }
    rep.criterion(5, "interpolation error and convergence", ok);
}

fn tails(rep: &mut Report) {
    let mut ok = true;
    for t in [1.6, 1.8] {
        for r in [10.0, 30.0] {
            let bound = tail_constant_cf(2, t, r, 1.0).unwrap();
            let oracle = common::cf_tail_oracle(t, r, CF_TAIL_LIMIT);
            ok &= bound >= oracle;
            detail(format!("lattice t {t} R {r}: constant {bound:.6e} >= brute force {oracle:.6e}: {}", bound >= oracle));
        }
    }
    for t in [1.1, 1.3] {
        for n in [50, 200] {
            let bound = tail_constant_apollonian(t, n, 6).unwrap();
            let oracle = common::apollonian_tail_oracle(t, n, 6, APOLLONIAN_TAIL_LIMIT);
            ok &= bound >= oracle;
            detail(format!("apollonian t {t} N {n}: constant {bound:.6e} >= series {oracle:.6e}: {}", bound >= oracle));
        }
    }
    rep.criterion(6, "tail dominance", ok);
}

fn constants(rep: &mut Report) {
    // (label, published, computed)
    let mobius = |pre: f64, t: f64| mobius_scale_free_minimum(pre, 2, t).0;
    let rows = [
        ("cf2-4gen, t 1.15", 41.0, mobius(1.0, 1.15)),
        ("cf2-lattice, t 1.86", 72.0, mobius(1.0, 1.86)),
        ("cf2-gauss-primes, t 1.515", 56.0, mobius(1.0, 1.515)),
        ("cf3-5gen, t 1.46", 54.0, mobius(1.0, 1.46)),
        ("cf3-lattice, t 2.6", 112.0, mobius(1.0, 2.6)),
        ("abc, t 0.633, s = r = 0.2", 1833.0, derivative_constant_analytic2d(0.633, 1.0, 2, Some(0.2))),
        ("schottky2d, t 0.3", 78.0, mobius(4.0 / 0.85f64.powi(2), 0.3)),
        ("schottky3d, t 0.825", 140.0, mobius(6.0 / 1.12f64.powi(2), 0.825)),
        ("apollonian, t 1.306", 95.0, mobius(2.0, 1.306)),
        ("apollonian-12, t 1.115", 80.0, mobius(2.0, 1.115)),
        ("apollonian-odd, t 1.08", 77.0, mobius(2.0, 1.08)),
    ];
    let mut ok = true;
    for (label, published, value) in rows {
        let pass = value <= published && value >= (1.0 - CONSTANT_SLACK) * published;
        ok &= pass;
        detail(format!(
            "{label}: computed {value:.4} vs published {published} ({:+.2}%){}",
            100.0 * (value / published - 1.0),
            if pass { "" } else { "  <- fails" }
        ));
    }
    rep.criterion(7, "derivative constants", ok);
}

fn verifiability(rep: &mut Report, records: &[ResultRecord]) {
    let mut ok = !records.is_empty();
    for r in records {
        if let Err(e) = verify_record(r) {
            ok = false;
            detail(format!("{} [{}, {}]: {e}", r.system, r.t_lo, r.t_hi));
        }
    }
    detail(format!("{} records re-verified", records.len()));
    if let Some(r) = records.first() {
        let mut shifted = r.clone();
        shifted.t_lo = r.t_lo - 0.5 * r.width.max(1e-3);
        let mut flipped = r.clone();
        let mut w = fracdim::record::decode_witness(&r.upper.witness).unwrap();
        w.0[0] = -w.0[0];
        flipped.upper.witness = fracdim::record::encode_witness(&w).0;
        let mut bumped = r.clone();
        bumped.upper.budget.c2 *= 0.5;
        for (label, m) in [("shifted t_lo", shifted), ("negated witness entry", flipped), ("halved C2", bumped)] {
            let rejected = verify_record(&m).is_err();
            ok &= rejected;
            detail(format!("mutation {label}: rejected {rejected}"));
        }
    }
    rep.criterion(8, "record verifiability", ok);
}

fn main() {
    let mut rep = Report { failures: 0 };
    let mut records = Vec::new();
    spectral_soundness(&mut rep);
    interpolation(&mut rep);
    tails(&mut rep);
    constants(&mut rep);
    similitude_oracle(&mut rep, &mut records);
    desk_systems(&mut rep, &mut records);
    large_systems(&mut rep, &mut records);
    verifiability(&mut rep, &records);
    println!("{} of 8 criteria failed", rep.failures);
    if rep.failures > 0 && std::env::var("FRACDIM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
