//! Bracketing the Bowen parameter: find `t_lo` with `r(A_{t_lo}) > 1` and
//! `t_hi` with `r(B_{t_hi}) < 1`, so that the dimension lies in `(t_lo, t_hi)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{Discretization, TailBound, TransferMatrices};
use crate::constants::{ConstantMethod, ErrorBudget};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, NodalVector};
use crate::spectral::{spectral_radius_interval_from, CertifiedRadius};
use crate::system::SystemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative Collatz-Wielandt spread at which power iteration stops.
    pub tol_spectral: f64,
    pub max_power_iterations: usize,
    pub max_evaluations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol_spectral: 1e-10, max_power_iterations: 5000, max_evaluations: 60 }
    }
}

/// A located discretization together with the constant policy.
pub struct SolverSetup<'a> {
    disc: Discretization<'a>,
    pub method: ConstantMethod,
    /// Analyticity margin measured from the meshed neighbourhood.
    pub eta_eff: f64,
    pub options: SolverOptions,
}

impl<'a> SolverSetup<'a> {
    /// `eta` is the margin of the vertex regions; the mesh may stick out of
    /// them by `mesh.max_offset`, which is subtracted.
    pub fn new(spec: &'a SystemSpec, mesh: &'a Mesh, method: ConstantMethod, eta: f64) -> Result<Self> {
        let eta_eff = eta - mesh.max_offset;
        if !(eta_eff > 0.0) {
            return Err(Error::Range(format!("mesh leaves the analyticity margin: eta {eta}, offset {}", mesh.max_offset)));
        }
        let disc = Discretization::new(spec, mesh)?;
        Ok(Self { disc, method, eta_eff, options: SolverOptions::default() })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn discretization(&self) -> &Discretization<'a> {
        &self.disc
    }

    pub fn spec(&self) -> &SystemSpec {
        self.disc.spec()
    }

    pub fn mesh(&self) -> &Mesh {
        self.disc.mesh()
    }

    /// Constants valid at exponent `t`.
    pub fn budget(&self, t: f64) -> Result<ErrorBudget> {
        ErrorBudget::compute(self.method, self.spec().dim, t, self.eta_eff, self.mesh().h_max)
    }

    pub fn matrices(&self, t: f64) -> Result<TransferMatrices> {
        let budget = self.budget(t)?;
        self.disc.matrices(t, &budget)
    }

    fn radius(&self, m: &crate::sparse::SparseMatrix, start: Option<&NodalVector>) -> Result<CertifiedRadius> {
        spectral_radius_interval_from(m, start, self.options.tol_spectral, self.options.max_power_iterations)
    }
}

/// `true` when the certified lower bound of `r(A_t)` exceeds 1.
pub fn certify_lower(setup: &SolverSetup, t: f64) -> Result<(bool, CertifiedRadius)> {
    let tm = setup.matrices(t)?;
    let r = setup.radius(&tm.a, None)?;
    Ok((r.lo > 1.0, r))
}

/// `true` when the certified upper bound of `r(B_t)` is below 1.
pub fn certify_upper(setup: &SolverSetup, t: f64) -> Result<(bool, CertifiedRadius)> {
    let tm = setup.matrices(t)?;
    let r = setup.radius(&tm.b, None)?;
    Ok((r.hi < 1.0, r))
}

/// One exponent of the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub t: f64,
    pub err: f64,
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
    pub tail: f64,
    pub lower_certified: bool,
    pub upper_certified: bool,
    pub seconds: f64,
}

impl Evaluation {
    /// Estimate of the radius of the unscaled operator matrix.
    pub fn operator_radius(&self) -> f64 {
        0.5 * (self.a_lo + self.a_hi) / TransferMatrices::lower_factor(self.err)
    }
}

/// Evidence at one endpoint of the interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub t: f64,
    pub radius: CertifiedRadius,
    pub budget: ErrorBudget,
    pub tail: Option<TailBound>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedInterval {
    pub t_lo: f64,
    pub t_hi: f64,
    /// `A_{t_lo}` with `lo > 1`.
    pub evidence_lo: Endpoint,
    /// `B_{t_hi}` with `hi < 1`.
    pub evidence_hi: Endpoint,
    pub h_max: f64,
    pub width_goal: f64,
    /// The goal was not met because `1 -+ err` caps the resolution.
    pub mesh_limited: bool,
    /// Operator radius estimates decrease along the trace.
    pub trace_monotone: bool,
    pub trace: Vec<Evaluation>,
    pub wall_seconds: f64,
}

impl CertifiedInterval {
    pub fn width(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn contains(&self, t: f64) -> bool {
        self.t_lo <= t && t <= self.t_hi
    }
}

struct Probe {
    eval: Evaluation,
    a: Option<Endpoint>,
    b: Option<Endpoint>,
}

/// Regula falsi bracket of one root with the Illinois modification.
#[derive(Clone, Copy, Debug)]
struct Side {
    good: (f64, f64),
    bad: (f64, f64),
    /// Weight on the retained endpoint's value after repeated one-sided moves.
    good_weight: f64,
    bad_weight: f64,
    last: Option<bool>,
}

impl Side {
    fn gap(&self) -> f64 {
        (self.bad.0 - self.good.0).abs()
    }

    fn next(&self) -> f64 {
        let (t1, f1) = (self.good.0, self.good.1 * self.good_weight);
        let (t2, f2) = (self.bad.0, self.bad.1 * self.bad_weight);
        let mut t = if f1 != f2 && f1.is_finite() && f2.is_finite() { t1 - f1 * (t2 - t1) / (f2 - f1) } else { 0.5 * (t1 + t2) };
        let lo = t1.min(t2) + 0.02 * self.gap();
        let hi = t1.max(t2) - 0.02 * self.gap();
        if !t.is_finite() {
            t = 0.5 * (t1 + t2);
        }
        t.clamp(lo, hi)
    }

    /// `good` means `f` has the sign of the good endpoint.
    fn update(&mut self, t: f64, f: f64, good: bool) {
        let inside = (t - self.good.0) * (t - self.bad.0) < 0.0;
        if !inside {
            return;
        }
        if good {
            self.good = (t, f);
            self.good_weight = 1.0;
            self.bad_weight = if self.last == Some(true) { self.bad_weight * 0.5 } else { 1.0 };
        } else {
            self.bad = (t, f);
            self.bad_weight = 1.0;
            self.good_weight = if self.last == Some(false) { self.good_weight * 0.5 } else { 1.0 };
        }
        self.last = Some(good);
    }
}

fn evaluate(setup: &SolverSetup, t: f64, warm: &mut Option<NodalVector>) -> Result<Probe> {
    let start = Instant::now();
    let budget = setup.budget(t)?;
    let tm = setup.discretization().matrices(t, &budget)?;
    let ra = setup.radius(&tm.a, warm.as_ref())?;
    let rb = setup.radius(&tm.b, Some(&ra.witness))?;
    *warm = Some(rb.witness.clone());
    let eval = Evaluation {
        t,
        err: tm.err,
        a_lo: ra.lo,
        a_hi: ra.hi,
        b_lo: rb.lo,
        b_hi: rb.hi,
        tail: tm.tail.as_ref().map_or(0.0, |tb| tb.total()),
        lower_certified: ra.lo > 1.0,
        upper_certified: rb.hi < 1.0,
        seconds: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "t = {t:.9}: r(A) in [{:.9}, {:.9}], r(B) in [{:.9}, {:.9}], err = {:.3e}",
        ra.lo,
        ra.hi,
        rb.lo,
        rb.hi,
        tm.err
    );
    let a = eval.lower_certified.then(|| Endpoint { t, radius: ra, budget: budget.clone(), tail: tm.tail.clone() });
    let b = eval.upper_certified.then(|| Endpoint { t, radius: rb, budget, tail: tm.tail });
    Ok(Probe { eval, a, b })
}

/// Searches for the tightest certified pair around `t_init`. With no
/// `width_goal`, the goal is 1.25 times the `err`-implied floor estimated
/// from the first two evaluations.
pub fn bracket_dimension(setup: &SolverSetup, width_goal: Option<f64>, t_init: (f64, f64)) -> Result<CertifiedInterval> {
    let clock = Instant::now();
    let (mut a, mut b) = (t_init.0.min(t_init.1), t_init.0.max(t_init.1));
    if !(a < b) {
        return Err(Error::Range(format!("initial bracket ({}, {}) is empty", t_init.0, t_init.1)));
    }
    let floor_t = setup.spec().alphabet.tail.as_ref().map_or(0.0, |tl| tl.admissibility_threshold());
    let max_evals = setup.options.max_evaluations;
    let mut warm = None;
    let mut trace: Vec<Evaluation> = Vec::new();
    let mut best_a: Option<Endpoint> = None;
    let mut best_b: Option<Endpoint> = None;

    let record = |p: Probe, trace: &mut Vec<Evaluation>, best_a: &mut Option<Endpoint>, best_b: &mut Option<Endpoint>| {
        if let Some(e) = p.a {
            if best_a.as_ref().is_none_or(|x| e.t > x.t) {
                *best_a = Some(e);
            }
        }
        if let Some(e) = p.b {
            if best_b.as_ref().is_none_or(|x| e.t < x.t) {
                *best_b = Some(e);
            }
        }
        trace.push(p.eval.clone());
        p.eval
    };

    let fail = |trace: &[Evaluation], reason: String| Error::BracketFailure { evaluations: trace.len(), reason };

    let mut ea = record(evaluate(setup, a, &mut warm)?, &mut trace, &mut best_a, &mut best_b);
    let mut eb = record(evaluate(setup, b, &mut warm)?, &mut trace, &mut best_a, &mut best_b);

    // widen until the lower end certifies for A and the upper end for B
    let mut step = b - a;
    while !ea.lower_certified {
        if trace.len() >= max_evals {
            return Err(fail(&trace, "no exponent with r(A) > 1 found".into()));
        }
        let next = (a - step).max(floor_t + 0.5 * (a - floor_t));
        if next >= a || a - next < 1e-12 {
            return Err(fail(&trace, format!("cannot move below t = {a} while keeping the tail admissible")));
        }
        b = b.min(a);
        a = next;
        step *= 2.0;
        ea = record(evaluate(setup, a, &mut warm)?, &mut trace, &mut best_a, &mut best_b);
    }
    step = b - a;
    while !eb.upper_certified {
        if trace.len() >= max_evals {
            return Err(fail(&trace, "no exponent with r(B) < 1 found; err may exceed the resolution".into()));
        }
        a = a.max(b);
        b += step;
        step *= 2.0;
        eb = record(evaluate(setup, b, &mut warm)?, &mut trace, &mut best_a, &mut best_b);
    }

    let width_goal = match width_goal {
        Some(w) => w,
        None => {
            let slope = (eb.operator_radius().ln() - ea.operator_radius().ln()) / (eb.t - ea.t);
            let err = ea.err.max(eb.err);
            1.25 * ((1.0 + err) / (1.0 - err)).ln() / slope.abs().max(1e-12)
        }
    };
    let tol_t = (0.01 * width_goal).max(1e-9);

    // lower root of ln lo(A), upper root of ln hi(B)
    let best_lo = |trace: &[Evaluation]| trace.iter().filter(|e| e.lower_certified).map(|e| e.t).fold(f64::NEG_INFINITY, f64::max);
    let best_hi = |trace: &[Evaluation]| trace.iter().filter(|e| e.upper_certified).map(|e| e.t).fold(f64::INFINITY, f64::min);
    let init_side = |trace: &[Evaluation], lower: bool| -> Side {
        let good = if lower { best_lo(trace) } else { best_hi(trace) };
        let value = |e: &Evaluation| if lower { e.a_lo.ln() } else { e.b_hi.ln() };
        let g = trace.iter().find(|e| e.t == good).unwrap();
        let bad = trace
            .iter()
            .filter(|e| if lower { !e.lower_certified && e.t > good } else { !e.upper_certified && e.t < good })
            .min_by(|x, y| (x.t - good).abs().partial_cmp(&(y.t - good).abs()).unwrap())
            .unwrap();
        Side { good: (good, value(g)), bad: (bad.t, value(bad)), good_weight: 1.0, bad_weight: 1.0, last: None }
    };
    let mut lower = init_side(&trace, true);
    let mut upper = init_side(&trace, false);

    while trace.len() < max_evals && (lower.gap() > tol_t || upper.gap() > tol_t) {
        let t = if lower.gap() >= upper.gap() { lower.next() } else { upper.next() };
        let e = record(evaluate(setup, t, &mut warm)?, &mut trace, &mut best_a, &mut best_b);
        lower.update(t, e.a_lo.ln(), e.lower_certified);
        upper.update(t, e.b_hi.ln(), e.upper_certified);
    }

    let evidence_lo = best_a.ok_or_else(|| fail(&trace, "no certified lower endpoint".into()))?;
    let evidence_hi = best_b.ok_or_else(|| fail(&trace, "no certified upper endpoint".into()))?;
    if !(evidence_lo.t < evidence_hi.t) {
        return Err(fail(&trace, format!("inconsistent endpoints {} >= {}", evidence_lo.t, evidence_hi.t)));
    }

    let mut sorted = trace.clone();
    sorted.sort_by(|x, y| x.t.partial_cmp(&y.t).unwrap());
    let trace_monotone = sorted.windows(2).all(|w| w[1].operator_radius() <= w[0].operator_radius() * (1.0 + 1e-9));
    if !trace_monotone {
        log::warn!("radius estimates are not decreasing along the trace");
    }
    let width = evidence_hi.t - evidence_lo.t;
    Ok(CertifiedInterval {
        t_lo: evidence_lo.t,
        t_hi: evidence_hi.t,
        h_max: setup.mesh().h_max,
        width_goal,
        mesh_limited: width > width_goal,
        trace_monotone,
        trace,
        wall_seconds: clock.elapsed().as_secs_f64(),
        evidence_lo,
        evidence_hi,
    })
}
