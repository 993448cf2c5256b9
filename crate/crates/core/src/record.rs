//! Run configuration, the end-to-end pipeline and self-contained result
//! records that can be re-verified from their stored witnesses.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::TailBound;
use crate::catalog::{lookup, similitude_system, SIMILITUDE_ETA};
use crate::constants::{ConstantAudit, ConstantMethod, ErrorBudget};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{build_mesh_for_system, default_delta, Mesh, NodalVector};
use crate::solver::{bracket_dimension, CertifiedInterval, Endpoint, Evaluation, SolverOptions, SolverSetup};
use crate::spectral::certify_bounds;
use crate::system::{validate_system_seeded, SystemSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either a catalog name or an inline similitude system.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: Option<String>,
    /// `R` or `N` for infinite alphabets; the catalog default otherwise.
    pub truncation: Option<f64>,
    pub similitude: Option<SimilitudeConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilitudeConfig {
    pub ratios: Vec<f64>,
    pub centers: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub width_goal: Option<f64>,
    pub tol_spectral: f64,
    pub max_power_iterations: usize,
    pub max_evaluations: usize,
    pub t_init: Option<[f64; 2]>,
    /// Seed of the validation samples.
    pub seed: u64,
    pub validation_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            width_goal: None,
            tol_spectral: o.tol_spectral,
            max_power_iterations: o.max_power_iterations,
            max_evaluations: o.max_evaluations,
            t_init: None,
            seed: 0,
            validation_samples: 64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub record: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub figure: Option<PathBuf>,
    pub figure_depth: Option<usize>,
}

impl RunConfig {
    pub fn for_system(name: &str, h: f64) -> Self {
        Self {
            system: SystemConfig { name: Some(name.to_string()), ..Default::default() },
            mesh: MeshConfig { h, delta: None },
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn for_similitude(ratios: &[f64], centers: &[[f64; 2]], h: f64) -> Self {
        Self {
            system: SystemConfig {
                similitude: Some(SimilitudeConfig { ratios: ratios.to_vec(), centers: centers.to_vec() }),
                ..Default::default()
            },
            mesh: MeshConfig { h, delta: None },
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.mesh.h > 0.0 && self.mesh.h.is_finite()) {
            return Err(Error::Config(format!("mesh h must be positive, got {}", self.mesh.h)));
        }
        if let Some(d) = self.mesh.delta {
            if !(d > 0.0) {
                return Err(Error::Config(format!("mesh delta must be positive, got {d}")));
            }
        }
        if let Some(w) = self.solver.width_goal {
            if !(w > 0.0) {
                return Err(Error::Config(format!("width goal must be positive, got {w}")));
            }
        }
        if !(self.solver.tol_spectral > 0.0) {
            return Err(Error::Config("tol_spectral must be positive".into()));
        }
        if let Some([a, b]) = self.solver.t_init {
            if !(0.0 < a && a < b) {
                return Err(Error::Config(format!("t_init [{a}, {b}] must satisfy 0 < lo < hi")));
            }
        }
        if self.solver.validation_samples < 10 {
            return Err(Error::Config("validation_samples must be at least 10".into()));
        }
        match (&self.system.name, &self.system.similitude) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(Error::Config("give exactly one of system.name and system.similitude".into())),
        }
    }
}

/// A system with the constant policy needed to run it.
#[derive(Clone, Debug)]
pub struct ResolvedSystem {
    pub spec: SystemSpec,
    pub method: ConstantMethod,
    pub eta: f64,
    pub t_init: (f64, f64),
}

pub fn resolve_system(config: &SystemConfig) -> Result<ResolvedSystem> {
    match (&config.name, &config.similitude) {
        (Some(name), None) => {
            let entry = lookup(name)?;
            if config.truncation.is_some() && !entry.is_infinite() {
                return Err(Error::Config(format!("{name} has a finite alphabet; truncation does not apply")));
            }
            let spec = entry.build(config.truncation)?;
            Ok(ResolvedSystem { spec, method: entry.method, eta: entry.eta, t_init: entry.hint() })
        }
        (None, Some(sim)) => {
            let centers: Vec<Point> = sim.centers.iter().map(|c| Point::new2(c[0], c[1])).collect();
            let spec = similitude_system(&sim.ratios, &centers).map_err(|e| Error::Config(e.to_string()))?;
            let guess = moran_guess(&spec);
            Ok(ResolvedSystem { spec, method: ConstantMethod::Mobius, eta: SIMILITUDE_ETA, t_init: (0.9 * guess, 1.1 * guess) })
        }
        _ => Err(Error::Config("give exactly one of system.name and system.similitude".into())),
    }
}

/// Root of `sum_e |D phi_e(c)|^t = 1` with derivatives frozen at the region
/// centres. Only a starting point for the search.
pub fn moran_guess(spec: &SystemSpec) -> f64 {
    let ratios: Vec<f64> = spec
        .alphabet
        .maps
        .iter()
        .filter_map(|m| m.derivative_norm(&spec.vertices[m.source].x.center()).ok())
        .filter(|r| *r > 0.0 && *r < 1.0)
        .collect();
    if ratios.is_empty() {
        return 0.5 * spec.dim as f64;
    }
    let p = |t: f64| ratios.iter().map(|r| r.powf(t)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (1e-6, spec.dim as f64);
    if p(hi) > 0.0 {
        return hi;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub fingerprint: String,
    pub nodes: usize,
    pub simplices: usize,
    pub target_h: f64,
    pub h_max: f64,
    pub delta: f64,
    pub max_offset: f64,
}

/// Which matrix an endpoint certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `lo(r(A_t)) > 1`.
    Lower,
    /// `hi(r(B_t)) < 1`.
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointRecord {
    pub side: Side,
    pub t: f64,
    pub radius_lo: f64,
    pub radius_hi: f64,
    pub iterations: usize,
    pub converged: bool,
    pub budget: ErrorBudget,
    pub tail: Option<TailBound>,
    pub matrix_sha256: String,
    pub witness_sha256: String,
    /// Base64 of the little-endian `f64` witness entries.
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub version: String,
    pub system: String,
    pub dim: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub width: f64,
    pub width_goal: f64,
    pub mesh_limited: bool,
    pub trace_monotone: bool,
    pub h_max: f64,
    pub wall_seconds: f64,
    pub method: ConstantMethod,
    pub eta: f64,
    pub eta_eff: f64,
    pub mesh: MeshSummary,
    pub lower: EndpointRecord,
    pub upper: EndpointRecord,
    pub constants: Vec<ConstantAudit>,
    pub trace: Vec<Evaluation>,
    pub config: RunConfig,
}

impl ResultRecord {
    pub fn contains(&self, t: f64) -> bool {
        self.t_lo <= t && t <= self.t_hi
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Human-readable report.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "system        {}", self.system);
        let _ = writeln!(s, "dimension in  [{:.9}, {:.9}]  width {:.3e}", self.t_lo, self.t_hi, self.width);
        let _ = writeln!(
            s,
            "width goal    {:.3e}{}",
            self.width_goal,
            if self.mesh_limited { "  (not reached: limited by the mesh)" } else { "" }
        );
        let _ = writeln!(
            s,
            "mesh          {} nodes, {} simplices, h_max {:.4e}, delta {:.4e}",
            self.mesh.nodes, self.mesh.simplices, self.mesh.h_max, self.mesh.delta
        );
        let _ = writeln!(s, "margin        eta {:.6}, effective {:.6}", self.eta, self.eta_eff);
        for c in &self.constants {
            let _ = writeln!(s, "constant      {:<5} {:.6e}  {}", c.name, c.value, c.detail);
        }
        let _ = writeln!(
            s,
            "lower end     t = {:.12}: r(A) >= {:.12}",
            self.lower.t, self.lower.radius_lo
        );
        let _ = writeln!(
            s,
            "upper end     t = {:.12}: r(B) <= {:.12}",
            self.upper.t, self.upper.radius_hi
        );
        if let Some(tb) = &self.upper.tail {
            let _ = writeln!(s, "tail          {:.6e} at truncation {}", tb.total(), tb.truncation);
        }
        let _ = writeln!(s, "evaluations   {} in {:.2} s", self.trace.len(), self.wall_seconds);
        if !self.trace_monotone {
            let _ = writeln!(s, "warning       radius estimates are not monotone along the trace");
        }
        s
    }
}

/// Result of [`run`], with the mesh kept for figures and diagnostics.
pub struct RunOutcome {
    pub record: ResultRecord,
    pub interval: CertifiedInterval,
    pub mesh: Mesh,
    pub system: ResolvedSystem,
}

/// Base64 of the little-endian entries and the SHA-256 of those bytes.
pub fn encode_witness(w: &NodalVector) -> (String, String) {
    let mut bytes = Vec::with_capacity(8 * w.len());
    for v in &w.0 {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let sha = hex::encode(Sha256::digest(&bytes));
    (B64.encode(&bytes), sha)
}

pub fn decode_witness(text: &str) -> Result<NodalVector> {
    let bytes = B64.decode(text).map_err(|e| Error::Verification(format!("witness is not valid base64: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Verification("witness length is not a multiple of 8 bytes".into()));
    }
    Ok(NodalVector(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()))
}

fn endpoint_record(setup: &SolverSetup, e: &Endpoint, side: Side) -> Result<EndpointRecord> {
    let tm = setup.discretization().matrices(e.t, &e.budget)?;
    let m = match side {
        Side::Lower => &tm.a,
        Side::Upper => &tm.b,
    };
    let (witness, witness_sha256) = encode_witness(&e.radius.witness);
    Ok(EndpointRecord {
        side,
        t: e.t,
        radius_lo: e.radius.lo,
        radius_hi: e.radius.hi,
        iterations: e.radius.iterations,
        converged: e.radius.converged,
        budget: e.budget.clone(),
        tail: e.tail.clone(),
        matrix_sha256: m.fingerprint(),
        witness_sha256,
        witness,
    })
}

fn build_mesh(system: &ResolvedSystem, config: &MeshConfig) -> Result<(Mesh, f64)> {
    let delta = config.delta.unwrap_or_else(|| default_delta(system.eta, config.h));
    Ok((build_mesh_for_system(&system.spec, config.h, delta)?, delta))
}

fn options(config: &SolverConfig) -> SolverOptions {
    SolverOptions {
        tol_spectral: config.tol_spectral,
        max_power_iterations: config.max_power_iterations,
        max_evaluations: config.max_evaluations,
    }
}

/// Validate, mesh, compute constants and bracket the dimension.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.check()?;
    let system = resolve_system(&config.system)?;
    let spec = &system.spec;

    let t_init = config.solver.t_init.map_or(system.t_init, |[a, b]| (a, b));
    let delta = config.mesh.delta.unwrap_or_else(|| default_delta(system.eta, config.mesh.h));
    if !(system.eta - delta > 0.0) {
        return Err(Error::Config(format!("delta {delta} leaves no analyticity margin (eta = {})", system.eta)));
    }
    // the mesh never sticks out by more than delta, so this budget is a
    // lower estimate of the one used at the upper end of the start bracket
    ErrorBudget::compute(system.method, spec.dim, t_init.1, system.eta - delta, config.mesh.h)?;

    let report = validate_system_seeded(spec, config.solver.validation_samples, config.solver.seed);
    if !report.all_passed() {
        let failed: Vec<String> =
            report.checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
        return Err(Error::Config(format!("system {} fails validation: {}", spec.name, failed.join(", "))));
    }

    log::info!("meshing {} at h = {} (delta = {delta})", spec.name, config.mesh.h);
    let (mesh, delta) = build_mesh(&system, &config.mesh)?;
    log::info!("{} nodes, {} simplices, h_max = {}", mesh.node_count(), mesh.simplex_count(), mesh.h_max);
    let setup = SolverSetup::new(spec, &mesh, system.method, system.eta)?.with_options(options(&config.solver));
    let interval = bracket_dimension(&setup, config.solver.width_goal, t_init)?;

    let lower = endpoint_record(&setup, &interval.evidence_lo, Side::Lower)?;
    let upper = endpoint_record(&setup, &interval.evidence_hi, Side::Upper)?;
    let mut constants = interval.evidence_lo.budget.audit();
    constants.extend(interval.evidence_hi.budget.audit());
    let record = ResultRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        system: spec.name.clone(),
        dim: spec.dim,
        t_lo: interval.t_lo,
        t_hi: interval.t_hi,
        width: interval.width(),
        width_goal: interval.width_goal,
        mesh_limited: interval.mesh_limited,
        trace_monotone: interval.trace_monotone,
        h_max: mesh.h_max,
        wall_seconds: interval.wall_seconds,
        method: system.method,
        eta: system.eta,
        eta_eff: setup.eta_eff,
        mesh: MeshSummary {
            fingerprint: mesh.fingerprint(),
            nodes: mesh.node_count(),
            simplices: mesh.simplex_count(),
            target_h: config.mesh.h,
            h_max: mesh.h_max,
            delta,
            max_offset: mesh.max_offset,
        },
        lower,
        upper,
        constants,
        trace: interval.trace.clone(),
        config: config.clone(),
    };
    drop(setup);
    Ok(RunOutcome { record, interval, mesh, system })
}

/// Re-assembles both endpoint matrices from the echoed configuration and
/// re-applies the Collatz-Wielandt bounds with the stored witnesses.
/// Returns the first violated condition as an error.
pub fn verify_record(record: &ResultRecord) -> Result<()> {
    let fail = |m: String| Err(Error::Verification(m));
    if !(record.t_lo < record.t_hi) {
        return fail(format!("t_lo = {} is not below t_hi = {}", record.t_lo, record.t_hi));
    }
    let w_lo = decode_witness(&record.lower.witness)?;
    let w_hi = decode_witness(&record.upper.witness)?;
    for (w, e) in [(&w_lo, &record.lower), (&w_hi, &record.upper)] {
        let (_, sha) = encode_witness(w);
        if let Some(index) = w.0.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Positivity { index, value: w.0[index] });
        }
        if sha != e.witness_sha256 {
            return fail(format!("{:?} witness does not match its digest", e.side));
        }
    }

    let config = &record.config;
    config.check()?;
    let system = resolve_system(&config.system)?;
    let (mesh, _) = build_mesh(&system, &config.mesh)?;
    if mesh.fingerprint() != record.mesh.fingerprint {
        return fail("rebuilt mesh differs from the recorded mesh".into());
    }
    let setup = SolverSetup::new(&system.spec, &mesh, system.method, system.eta)?;

    let budget_lo = setup.budget(record.t_lo)?;
    let tm = setup.discretization().matrices(record.t_lo, &budget_lo)?;
    let c = certify_bounds(&tm.a, &w_lo)?;
    if !(c.lo > 1.0) {
        return fail(format!("lower bound of r(A) at t_lo = {} is {} <= 1", record.t_lo, c.lo));
    }
    let fp_a = tm.a.fingerprint();
    drop(tm);

    let budget_hi = setup.budget(record.t_hi)?;
    let tm = setup.discretization().matrices(record.t_hi, &budget_hi)?;
    let c = certify_bounds(&tm.b, &w_hi)?;
    if !(c.hi < 1.0) {
        return fail(format!("upper bound of r(B) at t_hi = {} is {} >= 1", record.t_hi, c.hi));
    }
    let fp_b = tm.b.fingerprint();

    if fp_a != record.lower.matrix_sha256 {
        return fail("re-assembled A differs from the recorded matrix".into());
    }
    if fp_b != record.upper.matrix_sha256 {
        return fail("re-assembled B differs from the recorded matrix".into());
    }
    if budget_lo != record.lower.budget || budget_hi != record.upper.budget {
        return fail("recomputed error budget differs from the recorded one".into());
    }
    Ok(())
}

pub fn verify_record_file(path: &Path) -> Result<()> {
    verify_record(&ResultRecord::load(path)?)
}
