//! Compressed sparse row matrices with non-negative entries.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Row-compressed non-negative matrix. Row `j` holds the weights of the
/// discretized operator at node `j`, so `M w` evaluates the operator on the
/// nodal vector `w`. The sparsity pattern is shared between matrices built
/// from the same discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Arc<Vec<usize>>,
    cols: Arc<Vec<u32>>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Validates sortedness, bounds and non-negativity.
    pub fn new(n: usize, row_ptr: Arc<Vec<usize>>, cols: Arc<Vec<u32>>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != cols.len() || cols.len() != values.len() {
            return Err(Error::Geometry("inconsistent sparse matrix layout".into()));
        }
        for r in 0..n {
            let row = &cols[row_ptr[r]..row_ptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.last().is_some_and(|&c| c as usize >= n) {
                return Err(Error::Geometry(format!("row {r} has unsorted, duplicate or out-of-range columns")));
            }
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Geometry(format!("entry {i} is negative or not finite: {}", values[i])));
        }
        Ok(Self { n, row_ptr, cols, values })
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<u32> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::Geometry(format!("entry ({r}, {c}) outside a {n} x {n} matrix")));
            }
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(c as u32);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self::new(n, Arc::new(row_ptr), Arc::new(cols), values)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut t = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Geometry("dense input must be square".into()));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[range.clone()], &self.values[range])
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.n == other.n
            && (Arc::ptr_eq(&self.cols, &other.cols) || (self.row_ptr == other.row_ptr && self.cols == other.cols))
    }

    /// Same pattern, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.row_ptr.clone(), self.cols.clone(), values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        assert!(c >= 0.0);
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn into_scaled(mut self, c: f64) -> Self {
        assert!(c >= 0.0);
        for v in self.values.iter_mut() {
            *v *= c;
        }
        self
    }

    /// `y = M x`; each row sums its entries in stored order.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .into_par_iter()
            .with_min_len(1024)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c as usize]).sum()
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c as usize] = v;
            }
        }
        d
    }

    /// Adds `c` at `(r, col)` for every row `r` in `rows`, inserting entries
    /// into the pattern where needed.
    pub fn add_to_column(&self, col: usize, rows: impl Fn(usize) -> bool, c: f64) -> Result<Self> {
        let mut t = Vec::with_capacity(self.nnz() + self.n);
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&cc, &v) in cols.iter().zip(vals) {
                t.push((r, cc as usize, v));
            }
            if rows(r) {
                t.push((r, col, c));
            }
        }
        Self::from_triplets(self.n, t)
    }

    /// SHA-256 over the row pointers, columns and value bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for p in self.row_ptr.iter() {
            h.update((*p as u64).to_le_bytes());
        }
        for c in self.cols.iter() {
            h.update(c.to_le_bytes());
        }
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Coordinate text: one `row col value` line per stored entry, values
    /// with 17 significant digits.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 36 + 16);
        let _ = writeln!(out, "{} {}", self.n, self.nnz());
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{r} {c} {v:.16e}");
            }
        }
        out
    }

    pub fn from_coordinate_text(text: &str) -> Result<Self> {
        let bad = |l: &str| Error::Config(format!("malformed matrix line: {l}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad(""))?;
        let mut h = header.split_whitespace();
        let n: usize = h.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad(header))?;
        let mut t = Vec::new();
        for l in lines {
            let p: Vec<&str> = l.split_whitespace().collect();
            if p.len() != 3 {
                return Err(bad(l));
            }
            let r = p[0].parse().map_err(|_| bad(l))?;
            let c = p[1].parse().map_err(|_| bad(l))?;
            let v = p[2].parse().map_err(|_| bad(l))?;
            t.push((r, c, v));
        }
        Self::from_triplets(n, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![6.0, 4.0]);
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(SparseMatrix::from_triplets(2, vec![(0, 0, -1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, vec![(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn coordinate_round_trip_is_exact() {
        let vals = [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-17, 123456.789e10, f64::MIN_POSITIVE];
        let t: Vec<_> = vals.iter().enumerate().map(|(i, &v)| (i, (i * 2) % 5, v)).collect();
        let m = SparseMatrix::from_triplets(5, t).unwrap();
        let back = SparseMatrix::from_coordinate_text(&m.to_coordinate_text()).unwrap();
        assert_eq!(m.to_dense(), back.to_dense());
    }

    #[test]
    fn column_addition_extends_pattern() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let b = m.add_to_column(0, |_| true, 0.5).unwrap();
        assert_eq!(b.to_dense(), vec![vec![1.5, 0.0, 0.0], vec![0.5, 1.0, 0.0], vec![0.5, 0.0, 1.0]]);
        let same = m.add_to_column(1, |_| true, 0.0).unwrap();
        assert_eq!(same.to_dense(), m.to_dense());
    }
}
