//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use faer::Mat;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fracdim::sparse::SparseMatrix;

/// Spectral radius as the largest Perron root over the strongly connected
/// components of the nonzero pattern, each from a dense eigen-decomposition.
/// Splitting first avoids the `eps^(1/m)` error of defective zero eigenvalues.
pub fn dense_spectral_radius(m: &SparseMatrix) -> f64 {
    let d = m.to_dense();
    let mut best: f64 = 0.0;
    for comp in strong_components(&d) {
        let k = comp.len();
        if k == 1 {
            best = best.max(d[comp[0]][comp[0]]);
            continue;
        }
        let mut a: Vec<Vec<f64>> = comp.iter().map(|&i| comp.iter().map(|&j| d[i][j]).collect()).collect();
        balance(&mut a);
        // on an irreducible non-negative block r(A + cI) = r(A) + c; the shift
        // separates the Perron root from the rest of a cyclic spectrum
        let c = a.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>() / k as f64;
        let shifted = Mat::<f64>::from_fn(k, k, |i, j| a[i][j] + if i == j { c } else { 0.0 });
        let eig = shifted.eigenvalues().expect("dense eigenvalues did not converge");
        best = best.max(eig.iter().map(|z| z.norm()).fold(0.0, f64::max) - c);
    }
    best
}

/// Parlett-Reinsch balancing by powers of two (an exact similarity).
fn balance(a: &mut [Vec<f64>]) {
    let n = a.len();
    loop {
        let mut done = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| a[j][i]).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[i][j]).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if cc + rr < 0.95 * (c + r) {
                done = false;
                for j in 0..n {
                    a[i][j] /= f;
                    a[j][i] *= f;
                }
            }
        }
        if done {
            return;
        }
    }
}

/// Kosaraju on the graph `i -> j` iff `d[i][j] != 0`.
pub fn strong_components(d: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = d.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(u) = (*next..n).find(|&u| d[v][u] != 0.0 && !seen[u]) {
                *next = u + 1;
                seen[u] = true;
                stack.push((u, 0));
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            for u in 0..n {
                if d[u][v] != 0.0 && comp[u] == usize::MAX {
                    comp[u] = id;
                    members.push(u);
                }
            }
            i += 1;
        }
        out.push(members);
    }
    out
}

/// Random non-negative sparse matrix with the given fill.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, fill: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if rng.gen::<f64>() < fill {
                let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
                t.push((r, c, rng.gen::<f64>() * scale));
            }
        }
    }
    SparseMatrix::from_triplets(n, t).unwrap()
}

/// Random planar similitude system with pairwise disjoint image disks in the
/// unit disk: `(ratios, centers)`.
pub fn random_similitude(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<[f64; 2]>) {
    loop {
        let count = rng.gen_range(2..=5);
        let mut ratios: Vec<f64> = Vec::new();
        let mut centers: Vec<[f64; 2]> = Vec::new();
        for _ in 0..2000 {
            if ratios.len() == count {
                break;
            }
            let r = rng.gen_range(0.2..=0.6);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - r) * rng.gen::<f64>().sqrt();
            let c = [s * a.cos(), s * a.sin()];
            let clear = ratios
                .iter()
                .zip(&centers)
                .all(|(&q, d)| ((c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2)).sqrt() > r + q + 1e-3);
            if clear {
                ratios.push(r);
                centers.push(c);
            }
        }
        if ratios.len() == count {
            return (ratios, centers);
        }
    }
}

/// Upper bound for `sum over e in N x Z with |e| > R + 2` of
/// `sup_{x in B(1/2, 1/2)} |x + e|^{-2t}`: direct summation up to
/// `|e| <= limit`, plus an integral bound for the rest.
pub fn cf_tail_oracle(t: f64, radius: f64, limit: i64) -> f64 {
    let cut = radius + 2.0;
    let mut sum = 0.0;
    for a in 1..=limit {
        let af = a as f64;
        let bmax = ((limit * limit - a * a) as f64).sqrt().floor() as i64;
        for b in -bmax..=bmax {
            let bf = b as f64;
            if (af * af + bf * bf).sqrt() <= cut {
                continue;
            }
            let d = ((af + 0.5).powi(2) + bf * bf).sqrt() - 0.5;
            sum += d.powf(-2.0 * t);
        }
    }
    // |e| > L: each term is below (|e| - 1)^{-2t}; unit cells of the half
    // plane give at most pi * int_{L-1}^inf r (r - 2)^{-2t} dr
    let l = limit as f64 - 3.0;
    sum + std::f64::consts::PI * (l.powf(2.0 - 2.0 * t) / (2.0 * t - 2.0) + 2.0 * l.powf(1.0 - 2.0 * t) / (2.0 * t - 1.0))
}

/// Upper bound for `sum_{n > N} k (3 * 1.28)^t n^{-2t}`.
pub fn apollonian_tail_oracle(t: f64, n_trunc: usize, k: usize, limit: usize) -> f64 {
    let mut sum = 0.0;
    for n in n_trunc + 1..=limit {
        sum += (n as f64).powf(-2.0 * t);
    }
    sum += (limit as f64).powf(1.0 - 2.0 * t) / (2.0 * t - 1.0);
    k as f64 * 3.84f64.powf(t) * sum
}
