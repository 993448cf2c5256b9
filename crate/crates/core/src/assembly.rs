//! Assembly of the matrices `A_t <= B_t` whose spectral radii bracket the
//! leading eigenvalue of the transfer operator
//! `F_t g(x) = sum_e ||D phi_e(x)||^t g(phi_e(x))`.
//!
//! Point location does not depend on `t`, so a [`Discretization`] locates
//! every node image once and rebuilds the weights `||D phi_e(x_j)||^t` per
//! exponent. Systems too large to cache are relocated on every call.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{apollonian_angles, apollonian_power_normalized};
use crate::constants::{tail_constant_apollonian, tail_constant_cf, ErrorBudget};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::maps::ConformalMap;
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;
use crate::system::{SystemSpec, TailKind};

/// Relative slack applied on top of `1 -+ err` to absorb rounding.
pub const FP_SLACK: f64 = 1e-12;

/// Cached entries beyond this count switch assembly to relocation mode.
pub const CACHE_LIMIT: usize = 60_000_000;

/// Where the omitted maps of an infinite alphabet send the source region:
/// every such image lies within `reach` of the anchor node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailAnchor {
    pub vertex: usize,
    pub anchor: usize,
    pub reach: f64,
    /// Number of branches bounded by this anchor's sum.
    pub branches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailTerm {
    pub vertex: usize,
    pub anchor: usize,
    pub c0: f64,
}

/// Upper bound `sum_{omitted e} ||D phi_e(x)||^t rho(phi_e(x)) <= sum_k c0_k rho(anchor_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub terms: Vec<TailTerm>,
    pub truncation: f64,
    pub t: f64,
}

impl TailBound {
    pub fn total(&self) -> f64 {
        self.terms.iter().map(|t| t.c0).sum()
    }
}

#[derive(Clone, Debug)]
pub struct TransferMatrices {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub t: f64,
    pub err: f64,
    pub tail: Option<TailBound>,
    pub system_name: String,
    pub mesh_fingerprint: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub min_row_sum_a: f64,
    pub max_row_sum_a: f64,
    pub min_row_sum_b: f64,
    pub max_row_sum_b: f64,
    pub nnz: usize,
    pub fill: f64,
}

impl TransferMatrices {
    pub fn lower_factor(err: f64) -> f64 {
        (1.0 - err) * (1.0 - FP_SLACK)
    }

    pub fn upper_factor(err: f64) -> f64 {
        (1.0 + err) * (1.0 + FP_SLACK)
    }

    /// Row sums of both matrices (each row collects the weights at one node).
    pub fn stats(&self) -> MatrixStats {
        let minmax = |v: Vec<f64>| v.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let (min_a, max_a) = minmax(self.a.row_sums());
        let (min_b, max_b) = minmax(self.b.row_sums());
        let n = self.a.dim() as f64;
        MatrixStats {
            min_row_sum_a: min_a,
            max_row_sum_a: max_a,
            min_row_sum_b: min_b,
            max_row_sum_b: max_b,
            nnz: self.a.nnz(),
            fill: self.a.nnz() as f64 / (n * n),
        }
    }
}

/// Adds each tail term to `B` at `(j, anchor)` for every node `j` of its vertex.
pub fn apply_tail_correction(tm: TransferMatrices, tail: TailBound, node_region: &[u32]) -> Result<TransferMatrices> {
    let mut a = tm.a;
    let mut b = tm.b;
    for term in &tail.terms {
        let in_vertex = |r: usize| node_region[r] as usize == term.vertex;
        let present = (0..b.dim()).filter(|&r| in_vertex(r)).all(|r| b.row(r).0.binary_search(&(term.anchor as u32)).is_ok());
        if present {
            let mut vals = b.values().to_vec();
            let mut offset = 0;
            for r in 0..b.dim() {
                let (cols, _) = b.row(r);
                if in_vertex(r) {
                    let k = cols.binary_search(&(term.anchor as u32)).unwrap();
                    vals[offset + k] += term.c0;
                }
                offset += cols.len();
            }
            b = b.with_values(vals)?;
        } else {
            b = b.add_to_column(term.anchor, in_vertex, term.c0)?;
            a = a.add_to_column(term.anchor, in_vertex, 0.0)?;
        }
    }
    Ok(TransferMatrices { a, b, tail: Some(tail), ..tm })
}

/// Node images located once, reusable for every exponent `t`.
pub struct Discretization<'a> {
    spec: &'a SystemSpec,
    mesh: &'a Mesh,
    row_ptr: Arc<Vec<usize>>,
    cols: Arc<Vec<u32>>,
    cache: Option<PairCache>,
    anchors: Vec<TailAnchor>,
    fingerprint: String,
}

struct PairCache {
    /// Per row, the range of its (node, map) pairs.
    pair_ptr: Vec<usize>,
    deriv: Vec<f64>,
    /// `n + 1` absolute positions into the pattern per pair.
    slots: Vec<u32>,
    lambdas: Vec<f64>,
}

/// One node image: derivative norm and the weighted nodes of its simplex.
struct Contribution {
    deriv: f64,
    nodes: [u32; 4],
    lambdas: [f64; 4],
}

const BLOCK: usize = 2048;

impl<'a> Discretization<'a> {
    pub fn new(spec: &'a SystemSpec, mesh: &'a Mesh) -> Result<Self> {
        if mesh.dim != spec.dim {
            return Err(Error::Range(format!("mesh dimension {} does not match system dimension {}", mesh.dim, spec.dim)));
        }
        let anchors = tail_anchors(spec, mesh)?;
        let n = mesh.node_count();
        let per_vertex: Vec<usize> = (0..spec.vertices.len()).map(|v| spec.maps_from(v).count()).collect();
        let pairs: usize = mesh.node_region.iter().map(|&r| per_vertex[r as usize]).sum();
        let cached = pairs * (spec.dim + 2) <= CACHE_LIMIT;

        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        let mut cols: Vec<u32> = Vec::new();
        let mut cache = cached.then(|| PairCache {
            pair_ptr: vec![0],
            deriv: Vec::with_capacity(pairs),
            slots: Vec::with_capacity(pairs * (spec.dim + 1)),
            lambdas: Vec::with_capacity(pairs * (spec.dim + 1)),
        });
        let k = spec.dim + 1;

        for start in (0..n).step_by(BLOCK) {
            let end = (start + BLOCK).min(n);
            let rows: Vec<Result<Vec<Contribution>>> =
                (start..end).into_par_iter().map(|j| node_contributions(spec, mesh, j)).collect();
            for (offset, row) in rows.into_iter().enumerate() {
                let j = start + offset;
                let row = row?;
                let mut pattern: Vec<u32> = row.iter().flat_map(|c| c.nodes[..k].iter().copied()).collect();
                for a in anchors.iter().filter(|a| a.vertex == mesh.node_region[j] as usize) {
                    pattern.push(a.anchor as u32);
                }
                pattern.sort_unstable();
                pattern.dedup();
                let base = cols.len();
                if let Some(c) = cache.as_mut() {
                    for contrib in &row {
                        c.deriv.push(contrib.deriv);
                        for i in 0..k {
                            let pos = pattern.binary_search(&contrib.nodes[i]).unwrap();
                            c.slots.push((base + pos) as u32);
                            c.lambdas.push(contrib.lambdas[i]);
                        }
                    }
                    c.pair_ptr.push(c.deriv.len());
                }
                cols.extend_from_slice(&pattern);
                row_ptr.push(cols.len());
            }
        }
        if cols.len() > u32::MAX as usize {
            return Err(Error::Range("matrix has too many entries".into()));
        }
        Ok(Self {
            spec,
            mesh,
            row_ptr: Arc::new(row_ptr),
            cols: Arc::new(cols),
            cache,
            anchors,
            fingerprint: mesh.fingerprint(),
        })
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn anchors(&self) -> &[TailAnchor] {
        &self.anchors
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn spec(&self) -> &SystemSpec {
        self.spec
    }

    pub fn mesh_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Unscaled matrix `K_t` with `(K_t g)_j = sum_e ||D phi_e(x_j)||^t (I_h g)(phi_e(x_j))`.
    pub fn operator_matrix(&self, t: f64) -> Result<SparseMatrix> {
        let n = self.mesh.node_count();
        let mut values = vec![0.0; self.cols.len()];
        let k = self.spec.dim + 1;
        let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n);
        let mut rest = values.as_mut_slice();
        for j in 0..n {
            let (head, tail) = rest.split_at_mut(self.row_ptr[j + 1] - self.row_ptr[j]);
            rows.push((j, head));
            rest = tail;
        }
        match &self.cache {
            Some(c) => rows.into_par_iter().with_min_len(256).for_each(|(j, out)| {
                let base = self.row_ptr[j];
                for p in c.pair_ptr[j]..c.pair_ptr[j + 1] {
                    let w = c.deriv[p].powf(t);
                    for i in 0..k {
                        out[c.slots[p * k + i] as usize - base] += w * c.lambdas[p * k + i];
                    }
                }
            }),
            None => {
                let failure = std::sync::Mutex::new(None);
                rows.into_par_iter().with_min_len(64).for_each(|(j, out)| {
                    let pattern = &self.cols[self.row_ptr[j]..self.row_ptr[j + 1]];
                    match node_contributions(self.spec, self.mesh, j) {
                        Ok(list) => {
                            for c in list {
                                let w = c.deriv.powf(t);
                                for i in 0..k {
                                    let pos = pattern.binary_search(&c.nodes[i]).expect("pattern is stable");
                                    out[pos] += w * c.lambdas[i];
                                }
                            }
                        }
                        Err(e) => {
                            failure.lock().unwrap().get_or_insert(e);
                        }
                    }
                });
                if let Some(e) = failure.into_inner().unwrap() {
                    return Err(e);
                }
            }
        }
        SparseMatrix::new(n, self.row_ptr.clone(), self.cols.clone(), values)
    }

    /// Tail terms at exponent `t` with first-order constant `c1`.
    pub fn tail_bound(&self, t: f64, c1: f64) -> Result<Option<TailBound>> {
        let Some(tail) = &self.spec.alphabet.tail else { return Ok(None) };
        if !tail.admits(t) {
            return Err(Error::Range(format!(
                "t = {t} is not above the tail threshold {}",
                tail.admissibility_threshold()
            )));
        }
        let base = match &tail.kind {
            TailKind::CfIntegral { dim } => tail_constant_cf(*dim, t, tail.truncation, 1.0)?,
            TailKind::ApollonianGeometric { .. } => tail_constant_apollonian(t, tail.truncation as usize, 1)?,
        };
        let terms = self
            .anchors
            .iter()
            .map(|a| TailTerm {
                vertex: a.vertex,
                anchor: a.anchor,
                c0: a.branches as f64 * base * (c1 * a.reach).exp() * (1.0 + FP_SLACK),
            })
            .collect();
        Ok(Some(TailBound { terms, truncation: tail.truncation, t }))
    }

    /// `A_t` and `B_t` for the error budget valid at `t`.
    pub fn matrices(&self, t: f64, budget: &ErrorBudget) -> Result<TransferMatrices> {
        if !(budget.err_max < 1.0) {
            return Err(Error::ErrTooLarge { err: budget.err_max, suggested_h: budget.h_max / 2.0 });
        }
        let tail = self.tail_bound(t, budget.c1)?;
        let k = self.operator_matrix(t)?;
        let err = budget.err_max;
        let mut b_vals: Vec<f64> = k.values().iter().map(|v| v * TransferMatrices::upper_factor(err)).collect();
        if let Some(tb) = &tail {
            for term in &tb.terms {
                for j in 0..self.mesh.node_count() {
                    if self.mesh.node_region[j] as usize != term.vertex {
                        continue;
                    }
                    let row = &self.cols[self.row_ptr[j]..self.row_ptr[j + 1]];
                    let pos = row.binary_search(&(term.anchor as u32)).expect("anchor is in the pattern");
                    b_vals[self.row_ptr[j] + pos] += term.c0;
                }
            }
        }
        let b = k.with_values(b_vals)?;
        let a = k.into_scaled(TransferMatrices::lower_factor(err));
        Ok(TransferMatrices {
            a,
            b,
            t,
            err,
            tail,
            system_name: self.spec.name.clone(),
            mesh_fingerprint: self.fingerprint.clone(),
        })
    }
}

fn node_contributions(spec: &SystemSpec, mesh: &Mesh, j: usize) -> Result<Vec<Contribution>> {
    let x = &mesh.nodes[j];
    let vertex = mesh.node_region[j] as usize;
    let k = spec.dim + 1;
    let mut out = Vec::new();
    for (_, m) in spec.maps_from(vertex) {
        if let Some(w) = &m.domain {
            if !w.contains(x, 0.0) {
                return Err(Error::Domain { point: *x });
            }
        }
        let (y, deriv) = m.eval(x)?;
        let loc = mesh.locate(&y, m.target)?;
        let mut c = Contribution { deriv, nodes: [0; 4], lambdas: [0.0; 4] };
        c.nodes[..k].copy_from_slice(mesh.simplex_nodes(loc.simplex as usize));
        c.lambdas[..k].copy_from_slice(&loc.lambdas[..k]);
        out.push(c);
    }
    Ok(out)
}

/// Anchor nodes for the omitted maps. Lattice continued fractions send the
/// source region into `B(0, 1/(R+1))`; the Apollonian branch `k` sends it
/// into `R_{theta'_k} f^{N+1}(D)`.
fn tail_anchors(spec: &SystemSpec, mesh: &Mesh) -> Result<Vec<TailAnchor>> {
    let Some(tail) = &spec.alphabet.tail else { return Ok(Vec::new()) };
    if spec.vertices.len() != 1 {
        return Err(Error::Range("tail bounds are available for single-vertex systems only".into()));
    }
    let nearest = |p: &Point| mesh.nearest_node(p, 0).ok_or_else(|| Error::Geometry("empty region".into()));
    match &tail.kind {
        TailKind::CfIntegral { dim } => {
            let p = Point::origin(*dim);
            let anchor = nearest(&p)?;
            let reach = 1.0 / (tail.truncation + 1.0) + mesh.nodes[anchor].dist(&p);
            Ok(vec![TailAnchor { vertex: 0, anchor, reach, branches: 1 }])
        }
        TailKind::ApollonianGeometric { k_set } => {
            let n = tail.truncation as u32 + 1;
            let mut out = Vec::with_capacity(k_set.len());
            for &k in k_set {
                let (_, theta_prime) = apollonian_angles(k);
                let rot = num_complex::Complex64::from_polar(1.0, theta_prime);
                let p = apollonian_power_normalized(n);
                let m = [rot * p[0], rot * p[1], p[2], p[3]];
                let disk = ConformalMap::mobius(m, false, 0, 0)
                    .image_ball(&Point::new2(0.0, 0.0), 1.0)
                    .ok_or_else(|| Error::Geometry("Apollonian tail disk contains a pole".into()))?;
                let anchor = nearest(&disk.center)?;
                let reach = mesh.nodes[anchor].dist(&disk.center) + disk.radius;
                out.push(TailAnchor { vertex: 0, anchor, reach, branches: 1 });
            }
            Ok(out)
        }
    }
}

/// One-shot assembly at exponent `t`.
pub fn assemble(spec: &SystemSpec, mesh: &Mesh, t: f64, budget: &ErrorBudget) -> Result<TransferMatrices> {
    Discretization::new(spec, mesh)?.matrices(t, budget)
}
