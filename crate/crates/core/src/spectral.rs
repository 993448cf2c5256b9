//! Certified spectral-radius intervals for non-negative matrices.
//!
//! For a non-negative `M` and any strictly positive `w`,
//! `min_j (Mw)_j / w_j <= r(M) <= max_j (Mw)_j / w_j`. Power iteration only
//! improves the witness; soundness never depends on convergence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::NodalVector;
use crate::sparse::SparseMatrix;

/// Floor that keeps witness entries strictly positive.
pub const WITNESS_FLOOR: f64 = 1e-300;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRadius {
    pub lo: f64,
    pub hi: f64,
    pub witness: NodalVector,
    pub iterations: usize,
    /// Whether the power iteration reached the requested relative spread.
    pub converged: bool,
}

impl CertifiedRadius {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn relative_spread(&self) -> f64 {
        (self.hi - self.lo) / self.lo
    }
}

/// Outcome of a power iteration; the witness is usable even without convergence.
#[derive(Clone, Debug)]
pub struct PowerIteration {
    pub witness: NodalVector,
    pub iterations: usize,
    pub converged: bool,
}

/// Relative rounding allowance for the ratios `(Mw)_j / w_j`: a sum of
/// `k` non-negative products carries relative error at most `gamma_{k+1}`.
pub fn rounding_slack(max_row_nnz: usize) -> f64 {
    let u = f64::EPSILON / 2.0;
    let k = (max_row_nnz + 2) as f64;
    1e-12 + k * u / (1.0 - k * u)
}

fn ratios(mw: &[f64], w: &[f64]) -> (f64, f64) {
    mw.iter().zip(w).fold((f64::INFINITY, 0.0f64), |(lo, hi), (&y, &x)| {
        let r = y / x;
        (lo.min(r), hi.max(r))
    })
}

/// Power iteration from the all-ones vector.
pub fn power_iterate(m: &SparseMatrix, tol: f64, max_iter: usize) -> PowerIteration {
    power_iterate_from(m, vec![1.0; m.dim()], tol, max_iter)
}

/// Power iteration from a given positive start, normalized to max entry 1.
/// Stops once `(max ratio - min ratio) / min ratio <= tol`. The second half
/// of the iteration budget iterates with a diagonal shift.
pub fn power_iterate_from(m: &SparseMatrix, start: Vec<f64>, tol: f64, max_iter: usize) -> PowerIteration {
    assert_eq!(start.len(), m.dim());
    let mut w = start;
    normalize(&mut w);
    if (0..m.dim()).any(|r| m.row(r).0.is_empty()) {
        log::warn!("matrix has empty rows; the lower bound will be zero");
    }
    let mut iterations = 0;
    loop {
        let mut y = m.mul_vec(&w);
        let (lo, hi) = ratios(&y, &w);
        if lo > 0.0 && (hi - lo) <= tol * lo {
            return PowerIteration { witness: NodalVector(w), iterations, converged: true };
        }
        if iterations >= max_iter || hi == 0.0 {
            return PowerIteration { witness: NodalVector(w), iterations, converged: false };
        }
        if iterations >= max_iter / 2 {
            // M + hi I has the same Perron vector and damps the rotating
            // part of the spectrum of periodic matrices
            for (yi, wi) in y.iter_mut().zip(&w) {
                *yi += hi * wi;
            }
        }
        normalize(&mut y);
        w = y;
        iterations += 1;
    }
}

fn normalize(w: &mut [f64]) {
    let max = w.iter().cloned().fold(0.0, f64::max);
    let s = if max > 0.0 && max.is_finite() { 1.0 / max } else { 1.0 };
    for v in w.iter_mut() {
        *v = (*v * s).max(WITNESS_FLOOR);
    }
}

/// Rows whose products may leave the normal range fall back to per-term
/// quotients plus this absolute allowance per stored entry.
const SUBNORMAL_ALLOWANCE: f64 = 4.0 * f64::MIN_POSITIVE * f64::EPSILON;

/// Sums below this are recomputed term by term.
const SAFE_SUM: f64 = 1e-280;

/// `(Mw)_j / w_j` and an absolute error allowance for underflowed terms.
fn row_ratio(m: &SparseMatrix, w: &[f64], j: usize) -> (f64, f64) {
    let (cols, vals) = m.row(j);
    let s: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * w[c as usize]).sum();
    if s >= SAFE_SUM && s.is_finite() && w[j] >= SAFE_SUM {
        return (s / w[j], 0.0);
    }
    let inv = 1.0 / w[j];
    let r: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * (w[c as usize] * inv)).sum();
    (r, SUBNORMAL_ALLOWANCE * (3 * cols.len() + 1) as f64)
}

/// Collatz-Wielandt bracket with outward rounding slack.
pub fn certify_bounds(m: &SparseMatrix, w: &NodalVector) -> Result<CertifiedRadius> {
    if w.len() != m.dim() {
        return Err(Error::Range(format!("witness length {} does not match matrix size {}", w.len(), m.dim())));
    }
    if let Some(index) = w.0.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Positivity { index, value: w.0[index] });
    }
    let slack = rounding_slack(m.max_row_nnz());
    let (lo, hi) = (0..m.dim())
        .into_par_iter()
        .with_min_len(1024)
        .map(|j| row_ratio(m, &w.0, j))
        .fold(
            || (f64::INFINITY, 0.0f64),
            |(lo, hi), (r, abs)| (lo.min(r * (1.0 - slack) - abs), hi.max(r * (1.0 + slack) + abs)),
        )
        .reduce(|| (f64::INFINITY, 0.0f64), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let lo = lo.max(0.0);
    Ok(CertifiedRadius {
        lo,
        hi,
        witness: w.clone(),
        iterations: 0,
        converged: false,
    })
}

/// Power iteration followed by certification. `converged` reports whether
/// `hi - lo <= tol lo` was reached.
pub fn spectral_radius_interval(m: &SparseMatrix, tol: f64) -> Result<CertifiedRadius> {
    let max_iter = 10 * m.dim().max(10);
    spectral_radius_interval_from(m, None, tol, max_iter)
}

pub fn spectral_radius_interval_from(
    m: &SparseMatrix,
    start: Option<&NodalVector>,
    tol: f64,
    max_iter: usize,
) -> Result<CertifiedRadius> {
    let start = match start {
        Some(s) if s.len() == m.dim() => s.0.clone(),
        _ => vec![1.0; m.dim()],
    };
    let it = power_iterate_from(m, start, tol, max_iter);
    let mut c = certify_bounds(m, &it.witness)?;
    c.iterations = it.iterations;
    c.converged = c.hi - c.lo <= tol * c.lo;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> SparseMatrix {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn symmetric_two_by_two() {
        let m = dense(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let it = power_iterate(&m, 1e-8, 100);
        assert!(it.converged);
        assert_eq!(it.iterations, 0);
        assert_eq!(it.witness.0, vec![1.0, 1.0]);
        let c = certify_bounds(&m, &it.witness).unwrap();
        assert!((c.lo - 3.0).abs() < 1e-11 && (c.hi - 3.0).abs() < 1e-11);
    }

    #[test]
    fn all_ones_three() {
        let m = dense(&[&[1.0; 3], &[1.0; 3], &[1.0; 3]]);
        let c = spectral_radius_interval(&m, 1e-8).unwrap();
        assert_eq!(c.witness.0, vec![1.0; 3]);
        assert!(c.lo <= 3.0 && c.hi >= 3.0 && c.hi - c.lo < 1e-10);
    }

    #[test]
    fn crude_witness_brackets_radius() {
        let m = dense(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let c = certify_bounds(&m, &NodalVector(vec![1.0, 1.0])).unwrap();
        assert!((c.lo - 3.0).abs() < 1e-11 && (c.hi - 7.0).abs() < 1e-10);
        let r = (5.0 + 33f64.sqrt()) / 2.0;
        assert!(c.lo <= r && r <= c.hi);
    }

    #[test]
    fn diagonal_any_witness() {
        let m = dense(&[&[5.0]]);
        let c = certify_bounds(&m, &NodalVector(vec![0.37])).unwrap();
        assert!(c.lo <= 5.0 && c.hi >= 5.0 && c.hi - c.lo < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_witness() {
        let m = dense(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(certify_bounds(&m, &NodalVector(vec![1.0, -1.0])), Err(Error::Positivity { index: 1, .. })));
        assert!(matches!(certify_bounds(&m, &NodalVector(vec![0.0, 1.0])), Err(Error::Positivity { index: 0, .. })));
    }

    #[test]
    fn column_stochastic_matrix() {
        let m = dense(&[&[0.5, 0.2, 0.3], &[0.25, 0.5, 0.25], &[0.1, 0.1, 0.8]]);
        let c = spectral_radius_interval(&m, 1e-10).unwrap();
        assert!(c.converged);
        assert!(c.lo <= 1.0 && 1.0 <= c.hi && c.hi - c.lo <= 1e-9);
    }

    #[test]
    fn scale_invariance() {
        let m = dense(&[&[1.0, 2.0, 0.0], &[0.5, 0.0, 3.0], &[1.0, 1.0, 1.0]]);
        let w = NodalVector(vec![0.3, 0.9, 0.6]);
        let c = certify_bounds(&m, &w).unwrap();
        let c7 = certify_bounds(&m.scaled(7.0), &w).unwrap();
        assert!((c7.lo / (7.0 * c.lo) - 1.0).abs() < 1e-12);
        assert!((c7.hi / (7.0 * c.hi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_matrix_converges_with_shift() {
        let m = dense(&[&[0.0, 2.0], &[8.0, 0.0]]);
        let c = spectral_radius_interval(&m, 1e-10).unwrap();
        assert!(c.converged);
        assert!((c.lo - 4.0).abs() < 1e-8 && (c.hi - 4.0).abs() < 1e-8);
    }

    #[test]
    fn reducible_matrix_keeps_positive_witness() {
        let m = dense(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let it = power_iterate(&m, 1e-8, 50);
        assert!(it.witness.0.iter().all(|&v| v > 0.0));
        let c = certify_bounds(&m, &it.witness).unwrap();
        assert!(c.lo <= 1.0 && c.hi >= 1.0);
    }
}
