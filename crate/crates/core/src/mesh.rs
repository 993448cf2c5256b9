//! Structured simplicial meshes of the vertex regions, barycentric point
//! location and P1 interpolation.
//!
//! Each region is covered by a lattice anchored at its center: union-jack
//! triangles (four per square cell, cell side `h`) in the plane and Kuhn
//! tetrahedra (six per cube, cube side `h / sqrt 3`) in space. Whole cells
//! meeting the region are kept, so neighbouring simplices share nodes by
//! construction. Nodes farther than `delta` from the region are pulled
//! radially onto the boundary of the `delta`-neighbourhood.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Point, Region};
use crate::system::SystemSpec;

/// Barycentric coordinates may dip this far below zero and still count as inside.
pub const LOCATE_TOL: f64 = 1e-10;
const CLAMP_TOL: f64 = 1e-12;

type CellKey = [i32; 3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarycentricLocation {
    pub simplex: u32,
    /// First `n + 1` entries are used.
    pub lambdas: [f64; 4],
}

/// Values of a function at the mesh nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalVector(pub Vec<f64>);

impl NodalVector {
    pub fn from_fn(mesh: &Mesh, f: impl Fn(&Point) -> f64) -> Self {
        Self(mesh.nodes.iter().map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Bucket index of the simplices of one region.
#[derive(Clone, Debug)]
struct SimplexGrid {
    origin: Point,
    spacing: f64,
    lo: CellKey,
    extent: [usize; 3],
    starts: Vec<u32>,
    items: Vec<u32>,
    /// All simplices of the region, ascending.
    all: Vec<u32>,
}

impl SimplexGrid {
    fn bucket_coords(&self, p: &Point, dim: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        for (d, slot) in k.iter_mut().enumerate().take(dim) {
            *slot = ((p.coords[d] - self.origin.coords[d]) / self.spacing).floor() as i64 - self.lo[d] as i64;
        }
        k
    }

    fn bucket_index(&self, k: [i64; 3], dim: usize) -> Option<usize> {
        let mut idx = 0usize;
        for d in (0..dim).rev() {
            if k[d] < 0 || k[d] >= self.extent[d] as i64 {
                return None;
            }
            idx = idx * self.extent[d] + k[d] as usize;
        }
        Some(idx)
    }

    fn bucket(&self, idx: usize) -> &[u32] {
        &self.items[self.starts[idx] as usize..self.starts[idx + 1] as usize]
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<Point>,
    /// Node indices, `dim + 1` per simplex.
    pub simplices: Vec<u32>,
    pub simplex_region: Vec<u32>,
    pub node_region: Vec<u32>,
    pub h_per_simplex: Vec<f64>,
    pub h_max: f64,
    pub delta: f64,
    /// Largest distance of a node from its own region.
    pub max_offset: f64,
    grids: Vec<SimplexGrid>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub h_max: f64,
    pub node_count: usize,
    pub simplex_count: usize,
    pub min_quality: f64,
}

fn lattice_spacing(dim: usize, target_h: f64) -> f64 {
    if dim == 2 {
        target_h
    } else {
        target_h / 3f64.sqrt()
    }
}

/// Incremental lattice mesh builder over a set of ball regions.
pub struct MeshBuilder {
    dim: usize,
    spacing: f64,
    delta: f64,
    regions: Vec<Region>,
    cells: Vec<HashSet<CellKey>>,
    cell_order: Vec<(u32, CellKey)>,
}

impl MeshBuilder {
    pub fn new(regions: &[Region], target_h: f64, delta: f64) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::Geometry("no regions to mesh".into()));
        }
        let dim = regions[0].dim();
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(target_h > 0.0 && delta > 0.0) {
            return Err(Error::Range(format!("mesh size {target_h} and delta {delta} must be positive")));
        }
        Ok(Self {
            dim,
            spacing: lattice_spacing(dim, target_h),
            delta,
            regions: regions.to_vec(),
            cells: vec![HashSet::new(); regions.len()],
            cell_order: Vec::new(),
        })
    }

    fn cell_of(&self, region: usize, p: &Point) -> CellKey {
        let c = self.regions[region].center();
        let mut k = [0i32; 3];
        for (d, slot) in k.iter_mut().enumerate().take(self.dim) {
            *slot = ((p.coords[d] - c.coords[d]) / self.spacing).floor() as i32;
        }
        k
    }

    fn cell_distance(&self, region: usize, key: CellKey) -> f64 {
        let r = &self.regions[region];
        let mut d2 = 0.0;
        for d in 0..self.dim {
            let lo = key[d] as f64 * self.spacing;
            let hi = lo + self.spacing;
            let q = 0.0f64.clamp(lo, hi);
            d2 += q * q;
        }
        (d2.sqrt() - r.radius()).max(0.0)
    }

    pub fn add_cell(&mut self, region: usize, key: CellKey) -> bool {
        if self.cells[region].insert(key) {
            self.cell_order.push((region as u32, key));
            true
        } else {
            false
        }
    }

    pub fn has_cell_at(&self, region: usize, p: &Point) -> bool {
        self.cells[region].contains(&self.cell_of(region, p))
    }

    /// Adds the lattice cell containing `p` to `region`.
    pub fn add_cell_at(&mut self, region: usize, p: &Point) -> bool {
        let key = self.cell_of(region, p);
        self.add_cell(region, key)
    }

    /// Adds every cell meeting the closed region.
    pub fn cover_regions(&mut self) {
        for ri in 0..self.regions.len() {
            let n = (self.regions[ri].radius() / self.spacing).ceil() as i32 + 1;
            let zr = if self.dim == 3 { -n..n } else { 0..1 };
            for i in -n..n {
                for j in -n..n {
                    for k in zr.clone() {
                        let key = [i, j, k];
                        if self.cell_distance(ri, key) <= 0.0 {
                            self.add_cell(ri, key);
                        }
                    }
                }
            }
        }
    }

    fn lattice_point(&self, region: usize, doubled: [i64; 3]) -> Point {
        let c = self.regions[region].center();
        let mut p = c;
        for d in 0..self.dim {
            p.coords[d] = c.coords[d] + 0.5 * doubled[d] as f64 * self.spacing;
        }
        p
    }

    pub fn build(&self) -> Result<Mesh> {
        let dim = self.dim;
        let mut nodes = Vec::new();
        let mut node_region = Vec::new();
        let mut simplices = Vec::new();
        let mut simplex_region = Vec::new();
        let mut node_ids: HashMap<(u32, [i64; 3]), u32> = HashMap::new();
        let mut max_offset: f64 = 0.0;

        let mut node = |region: u32, doubled: [i64; 3], nodes: &mut Vec<Point>, node_region: &mut Vec<u32>| -> u32 {
            *node_ids.entry((region, doubled)).or_insert_with(|| {
                let mut p = self.lattice_point(region as usize, doubled);
                let r = &self.regions[region as usize];
                let dist = r.signed_distance(&p);
                if dist > self.delta {
                    let c = r.center();
                    let dir = p.sub(&c);
                    p = c.add(&dir.scale((r.radius() + self.delta) / dir.norm()));
                }
                max_offset = max_offset.max(r.signed_distance(&p));
                nodes.push(p);
                node_region.push(region);
                (nodes.len() - 1) as u32
            })
        };

        for &(region, key) in &self.cell_order {
            let base = [2 * key[0] as i64, 2 * key[1] as i64, 2 * key[2] as i64];
            let corner = |dx: i64, dy: i64, dz: i64| [base[0] + 2 * dx, base[1] + 2 * dy, base[2] + 2 * dz];
            if dim == 2 {
                let c00 = node(region, corner(0, 0, 0), &mut nodes, &mut node_region);
                let c10 = node(region, corner(1, 0, 0), &mut nodes, &mut node_region);
                let c11 = node(region, corner(1, 1, 0), &mut nodes, &mut node_region);
                let c01 = node(region, corner(0, 1, 0), &mut nodes, &mut node_region);
                let m = node(region, [base[0] + 1, base[1] + 1, 0], &mut nodes, &mut node_region);
                for (a, b) in [(c00, c10), (c10, c11), (c11, c01), (c01, c00)] {
                    if !degenerate(&nodes, &[a, b, m], dim) {
                        simplices.extend_from_slice(&[a, b, m]);
                        simplex_region.push(region);
                    }
                }
            } else {
                let mut ids = [0u32; 8];
                for (bit, id) in ids.iter_mut().enumerate() {
                    let (dx, dy, dz) = ((bit & 1) as i64, ((bit >> 1) & 1) as i64, ((bit >> 2) & 1) as i64);
                    *id = node(region, corner(dx, dy, dz), &mut nodes, &mut node_region);
                }
                // Kuhn subdivision: paths from (0,0,0) to (1,1,1) along each axis order
                for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                    let mut v = 0usize;
                    let mut tet = [ids[0]; 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        v |= 1 << axis;
                        tet[s + 1] = ids[v];
                    }
                    if !degenerate(&nodes, &tet, dim) {
                        simplices.extend_from_slice(&tet);
                        simplex_region.push(region);
                    }
                }
            }
        }

        let mut mesh = Mesh {
            dim,
            nodes,
            simplices,
            simplex_region,
            node_region,
            h_per_simplex: Vec::new(),
            h_max: 0.0,
            delta: self.delta,
            max_offset,
            grids: Vec::new(),
        };
        mesh.finalize(self.regions.iter().map(|r| r.center()).collect(), self.spacing)?;
        Ok(mesh)
    }
}

impl Mesh {
    /// Assembles a mesh from explicit nodes and simplices. Every region gets
    /// a bucket grid anchored at `anchors[region]` with the given spacing.
    pub fn from_parts(
        dim: usize,
        nodes: Vec<Point>,
        simplices: Vec<u32>,
        simplex_region: Vec<u32>,
        anchors: Vec<Point>,
        spacing: f64,
    ) -> Result<Self> {
        let mut node_region = vec![0u32; nodes.len()];
        for (s, &r) in simplex_region.iter().enumerate() {
            for &v in &simplices[s * (dim + 1)..(s + 1) * (dim + 1)] {
                node_region[v as usize] = r;
            }
        }
        let mut mesh = Mesh {
            dim,
            nodes,
            simplices,
            simplex_region,
            node_region,
            h_per_simplex: Vec::new(),
            h_max: 0.0,
            delta: 0.0,
            max_offset: 0.0,
            grids: Vec::new(),
        };
        mesh.finalize(anchors, spacing)?;
        Ok(mesh)
    }

    fn finalize(&mut self, anchors: Vec<Point>, spacing: f64) -> Result<()> {
        let dim = self.dim;
        let ns = self.simplex_count();
        self.h_per_simplex = Vec::with_capacity(ns);
        for s in 0..ns {
            let v = self.simplex_nodes(s);
            let mut diam: f64 = 0.0;
            for a in 0..=dim {
                for b in a + 1..=dim {
                    diam = diam.max(self.nodes[v[a] as usize].dist(&self.nodes[v[b] as usize]));
                }
            }
            let vol = self.simplex_volume(s);
            if !(vol > FLAT * diam.powi(dim as i32)) {
                return Err(Error::Geometry(format!("simplex {s} has volume {vol:e} at diameter {diam:e}")));
            }
            self.h_per_simplex.push(diam);
        }
        self.h_max = self.h_per_simplex.iter().cloned().fold(0.0, f64::max);

        let nregions = anchors.len();
        let mut grids = Vec::with_capacity(nregions);
        for (region, origin) in anchors.into_iter().enumerate() {
            let members: Vec<u32> =
                (0..ns as u32).filter(|&s| self.simplex_region[s as usize] == region as u32).collect();
            grids.push(self.build_grid(origin, spacing, members));
        }
        self.grids = grids;
        Ok(())
    }

    fn simplex_bbox(&self, s: usize) -> (Point, Point) {
        let v = self.simplex_nodes(s);
        let mut lo = self.nodes[v[0] as usize];
        let mut hi = lo;
        for &i in &v[1..] {
            let p = &self.nodes[i as usize];
            for d in 0..self.dim {
                lo.coords[d] = lo.coords[d].min(p.coords[d]);
                hi.coords[d] = hi.coords[d].max(p.coords[d]);
            }
        }
        (lo, hi)
    }

    fn build_grid(&self, origin: Point, spacing: f64, members: Vec<u32>) -> SimplexGrid {
        let dim = self.dim;
        let idx = |x: f64, o: f64| ((x - o) / spacing).floor() as i64;
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        let mut ranges = Vec::with_capacity(members.len());
        for &s in &members {
            let (a, b) = self.simplex_bbox(s as usize);
            let mut r = [(0i64, 0i64); 3];
            for d in 0..dim {
                let i0 = idx(a.coords[d], origin.coords[d]);
                // exclusive upper face: a box ending on a lattice plane stays in the lower cell
                let mut i1 = ((b.coords[d] - origin.coords[d]) / spacing).ceil() as i64 - 1;
                if i1 < i0 {
                    i1 = i0;
                }
                r[d] = (i0, i1);
                lo[d] = lo[d].min(i0);
                hi[d] = hi[d].max(i1);
            }
            ranges.push(r);
        }
        if members.is_empty() {
            lo = [0; 3];
            hi = [0; 3];
        }
        let mut extent = [1usize; 3];
        let mut lo32 = [0i32; 3];
        for d in 0..dim {
            extent[d] = (hi[d] - lo[d] + 1) as usize;
            lo32[d] = lo[d] as i32;
        }
        let nb: usize = extent.iter().product();
        let flat = |k: [i64; 3]| -> usize {
            let mut f = 0usize;
            for d in (0..dim).rev() {
                f = f * extent[d] + (k[d] - lo[d]) as usize;
            }
            f
        };
        let mut counts = vec![0u32; nb + 1];
        let visit = |r: &[(i64, i64); 3], f: &mut dyn FnMut(usize)| {
            let zr = if dim == 3 { r[2].0..=r[2].1 } else { 0..=0 };
            for i in r[0].0..=r[0].1 {
                for j in r[1].0..=r[1].1 {
                    for k in zr.clone() {
                        f(flat([i, j, k]));
                    }
                }
            }
        };
        for r in &ranges {
            visit(r, &mut |b| counts[b + 1] += 1);
        }
        for b in 0..nb {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; counts[nb] as usize];
        for (r, &s) in ranges.iter().zip(&members) {
            visit(r, &mut |b| {
                items[fill[b] as usize] = s;
                fill[b] += 1;
            });
        }
        SimplexGrid { origin, spacing, lo: lo32, extent, starts: counts, items, all: members }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn region_count(&self) -> usize {
        self.grids.len()
    }

    #[inline]
    pub fn simplex_nodes(&self, s: usize) -> &[u32] {
        &self.simplices[s * (self.dim + 1)..(s + 1) * (self.dim + 1)]
    }

    fn simplex_volume(&self, s: usize) -> f64 {
        let v = self.simplex_nodes(s);
        let p0 = self.nodes[v[0] as usize];
        let e: Vec<Point> = v[1..].iter().map(|&i| self.nodes[i as usize].sub(&p0)).collect();
        if self.dim == 2 {
            0.5 * (e[0].x() * e[1].y() - e[0].y() * e[1].x()).abs()
        } else {
            det3(&e[0], &e[1], &e[2]).abs() / 6.0
        }
    }

    /// Barycentric coordinates of `x` with respect to simplex `s`.
    #[inline]
    pub fn barycentric(&self, s: usize, x: &Point) -> [f64; 4] {
        let v = self.simplex_nodes(s);
        let p0 = &self.nodes[v[0] as usize];
        let r = x.sub(p0);
        if self.dim == 2 {
            let a = self.nodes[v[1] as usize].sub(p0);
            let b = self.nodes[v[2] as usize].sub(p0);
            let det = a.x() * b.y() - a.y() * b.x();
            let l1 = (r.x() * b.y() - r.y() * b.x()) / det;
            let l2 = (a.x() * r.y() - a.y() * r.x()) / det;
            [1.0 - l1 - l2, l1, l2, 0.0]
        } else {
            let a = self.nodes[v[1] as usize].sub(p0);
            let b = self.nodes[v[2] as usize].sub(p0);
            let c = self.nodes[v[3] as usize].sub(p0);
            let det = det3(&a, &b, &c);
            let l1 = det3(&r, &b, &c) / det;
            let l2 = det3(&a, &r, &c) / det;
            let l3 = det3(&a, &b, &r) / det;
            [1.0 - l1 - l2 - l3, l1, l2, l3]
        }
    }

    fn min_lambda(&self, l: &[f64; 4]) -> f64 {
        l[..=self.dim].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn finish_location(&self, s: u32, mut l: [f64; 4]) -> BarycentricLocation {
        let n = self.dim + 1;
        if l[..n].iter().any(|&v| v < 0.0) {
            for v in l[..n].iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let sum: f64 = l[..n].iter().sum();
            for v in l[..n].iter_mut() {
                *v /= sum;
            }
        }
        BarycentricLocation { simplex: s, lambdas: l }
    }

    /// Finds a simplex of region `hint_vertex` containing `x`; among the
    /// simplices filed under the bucket of `x`, the lowest index wins.
    pub fn locate(&self, x: &Point, hint_vertex: usize) -> Result<BarycentricLocation> {
        let grid = self.grids.get(hint_vertex).ok_or_else(|| Error::Geometry(format!("no region {hint_vertex}")))?;
        let dim = self.dim;
        let mut best = (f64::NEG_INFINITY, 0u32, [0.0; 4]);
        let consider = |s: u32, best: &mut (f64, u32, [f64; 4])| -> bool {
            let l = self.barycentric(s as usize, x);
            let m = self.min_lambda(&l);
            if m > best.0 || (m == best.0 && s < best.1) {
                *best = (m, s, l);
            }
            m >= -CLAMP_TOL
        };

        let home = grid.bucket_coords(x, dim);
        if let Some(b) = grid.bucket_index(home, dim) {
            for &s in grid.bucket(b) {
                if consider(s, &mut best) {
                    return Ok(self.finish_location(s, best.2));
                }
            }
        }
        if best.0 >= -LOCATE_TOL {
            return Ok(self.finish_location(best.1, best.2));
        }

        // neighbouring buckets, nearest rings first
        let mut visited = 1usize;
        'rings: for ring in 1i64..=3 {
            let zr = if dim == 3 { -ring..=ring } else { 0..=0 };
            for di in -ring..=ring {
                for dj in -ring..=ring {
                    for dk in zr.clone() {
                        if di.abs().max(dj.abs()).max(dk.abs()) != ring {
                            continue;
                        }
                        if visited >= 64 {
                            break 'rings;
                        }
                        visited += 1;
                        let k = [home[0] + di, home[1] + dj, home[2] + dk];
                        if let Some(b) = grid.bucket_index(k, dim) {
                            for &s in grid.bucket(b) {
                                consider(s, &mut best);
                            }
                        }
                    }
                }
            }
        }
        if best.0 >= -LOCATE_TOL {
            return Ok(self.finish_location(best.1, best.2));
        }

        for &s in &grid.all {
            if consider(s, &mut best) {
                break;
            }
        }
        if best.0 >= -LOCATE_TOL {
            return Ok(self.finish_location(best.1, best.2));
        }
        Err(Error::NotFound { point: *x, best: best.0 })
    }

    pub fn interpolate(&self, v: &NodalVector, loc: &BarycentricLocation) -> f64 {
        let nodes = self.simplex_nodes(loc.simplex as usize);
        nodes.iter().zip(loc.lambdas.iter()).map(|(&i, &l)| l * v.0[i as usize]).sum()
    }

    pub fn stats(&self) -> MeshStats {
        let mut min_quality = f64::INFINITY;
        for s in 0..self.simplex_count() {
            min_quality = min_quality.min(self.inradius(s) / self.h_per_simplex[s]);
        }
        MeshStats { h_max: self.h_max, node_count: self.node_count(), simplex_count: self.simplex_count(), min_quality }
    }

    fn inradius(&self, s: usize) -> f64 {
        let v = self.simplex_nodes(s);
        let p = |i: usize| self.nodes[v[i] as usize];
        let vol = self.simplex_volume(s);
        if self.dim == 2 {
            let perimeter = p(0).dist(&p(1)) + p(1).dist(&p(2)) + p(2).dist(&p(0));
            2.0 * vol / perimeter
        } else {
            let face = |a: usize, b: usize, c: usize| {
                let u = p(b).sub(&p(a));
                let w = p(c).sub(&p(a));
                let cx = u.y() * w.z() - u.z() * w.y();
                let cy = u.z() * w.x() - u.x() * w.z();
                let cz = u.x() * w.y() - u.y() * w.x();
                0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
            };
            let area = face(0, 1, 2) + face(0, 1, 3) + face(0, 2, 3) + face(1, 2, 3);
            3.0 * vol / area
        }
    }

    /// Node nearest to `p` among the nodes of `region`.
    pub fn nearest_node(&self, p: &Point, region: usize) -> Option<usize> {
        (0..self.node_count())
            .filter(|&i| self.node_region[i] as usize == region)
            .min_by(|&a, &b| self.nodes[a].dist(p).partial_cmp(&self.nodes[b].dist(p)).unwrap())
    }

    /// Text dump: `v x y [z]` per node, then `s i j k [l] region` per simplex.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.node_count() * 40 + self.simplex_count() * 30);
        for p in &self.nodes {
            out.push('v');
            for c in p.as_slice() {
                let _ = write!(out, " {c:?}");
            }
            out.push('\n');
        }
        for s in 0..self.simplex_count() {
            out.push('s');
            for i in self.simplex_nodes(s) {
                let _ = write!(out, " {i}");
            }
            let _ = writeln!(out, " {}", self.simplex_region[s]);
        }
        out
    }

    /// Parses a text dump. Bucket grids are rebuilt from the given anchors.
    pub fn from_text(text: &str, anchors: Vec<Point>, spacing: f64) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut simplices = Vec::new();
        let mut regions = Vec::new();
        let mut dim = 0;
        let bad = |line: &str| Error::Geometry(format!("malformed mesh line: {line}"));
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let c: Vec<f64> = parts.map(|t| t.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad(line))?;
                    if c.len() != 2 && c.len() != 3 {
                        return Err(bad(line));
                    }
                    dim = c.len();
                    nodes.push(Point::from_slice(&c));
                }
                Some("s") => {
                    let c: Vec<u32> = parts.map(|t| t.parse::<u32>()).collect::<std::result::Result<_, _>>().map_err(|_| bad(line))?;
                    if c.len() != dim + 2 {
                        return Err(bad(line));
                    }
                    simplices.extend_from_slice(&c[..=dim]);
                    regions.push(c[dim + 1]);
                }
                _ => return Err(bad(line)),
            }
        }
        Mesh::from_parts(dim, nodes, simplices, regions, anchors, spacing)
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// SHA-256 over the little-endian node coordinates, simplices and tags.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for p in &self.nodes {
            for c in p.as_slice() {
                h.update(c.to_le_bytes());
            }
        }
        for i in &self.simplices {
            h.update(i.to_le_bytes());
        }
        for r in &self.simplex_region {
            h.update(r.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Relative volume threshold below which a simplex counts as flat.
const FLAT: f64 = 1e-12;

/// Snapping boundary nodes onto the outer sphere can flatten simplices of
/// the outermost cells; those cover no area and are skipped.
fn degenerate(nodes: &[Point], ids: &[u32], dim: usize) -> bool {
    let p0 = nodes[ids[0] as usize];
    let e: Vec<Point> = ids[1..].iter().map(|&i| nodes[i as usize].sub(&p0)).collect();
    let vol = if dim == 2 { 0.5 * (e[0].x() * e[1].y() - e[0].y() * e[1].x()).abs() } else { det3(&e[0], &e[1], &e[2]).abs() / 6.0 };
    let mut diam: f64 = 0.0;
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            diam = diam.max(nodes[ids[a] as usize].dist(&nodes[ids[b] as usize]));
        }
    }
    !(vol > FLAT * diam.powi(dim as i32))
}

#[inline]
fn det3(a: &Point, b: &Point, c: &Point) -> f64 {
    a.x() * (b.y() * c.z() - b.z() * c.y()) - a.y() * (b.x() * c.z() - b.z() * c.x()) + a.z() * (b.x() * c.y() - b.y() * c.x())
}

/// Default neighbourhood width: `min(eta / 2, 2 h)`.
pub fn default_delta(eta: f64, target_h: f64) -> f64 {
    (0.5 * eta).min(2.0 * target_h)
}

/// Boundary samples of every region must locate.
fn check_coverage(mesh: &Mesh, regions: &[Region]) -> Result<()> {
    for (v, r) in regions.iter().enumerate() {
        let count = if r.dim() == 2 { 2048 } else { 4096 };
        for p in r.samples(2 * count, 17).into_iter().take(count) {
            if mesh.locate(&p, v).is_err() {
                return Err(Error::Coverage { point: p, vertex: v });
            }
        }
    }
    Ok(())
}

/// Meshes the given regions with simplices of diameter at most `target_h`.
pub fn build_mesh(regions: &[Region], target_h: f64, delta: f64) -> Result<Mesh> {
    let mut builder = MeshBuilder::new(regions, target_h, delta)?;
    builder.cover_regions();
    let mesh = builder.build()?;
    check_coverage(&mesh, regions)?;
    Ok(mesh)
}

/// Meshes the vertex regions of a system and then adds the lattice cells
/// needed to contain the images of all nodes under all maps, so that the
/// transfer operator can be collocated at every node.
pub fn build_mesh_for_system(spec: &SystemSpec, target_h: f64, delta: f64) -> Result<Mesh> {
    let regions = spec.x_regions();
    let mut builder = MeshBuilder::new(&regions, target_h, delta)?;
    builder.cover_regions();
    let mut mesh = builder.build()?;
    let reach = delta.max(lattice_spacing(spec.dim, target_h) * 4.0);

    // maps whose image of the padded source region stays inside the target
    // region can never leave the initial mesh
    let pad = mesh.max_offset.max(delta);
    let escaping: Vec<usize> = spec
        .alphabet
        .maps
        .iter()
        .enumerate()
        .filter(|(_, m)| {
            let src = &regions[m.source];
            let tgt = &regions[m.target];
            match m.image_ball(&src.center(), src.radius() + pad) {
                Some(b) => b.center.dist(&tgt.center()) + b.radius > tgt.radius(),
                None => true,
            }
        })
        .map(|(i, _)| i)
        .collect();

    let mut fresh: Vec<usize> = (0..mesh.node_count()).collect();
    for _round in 0..8 {
        let mut added = false;
        for &node in &fresh {
            let x = mesh.nodes[node];
            let v = mesh.node_region[node] as usize;
            for &mi in &escaping {
                let m = &spec.alphabet.maps[mi];
                if m.source != v {
                    continue;
                }
                let y = match m.eval(&x) {
                    Ok((y, _)) => y,
                    Err(_) => continue,
                };
                if builder.has_cell_at(m.target, &y) || regions[m.target].signed_distance(&y) > reach {
                    continue;
                }
                added |= builder.add_cell_at(m.target, &y);
            }
        }
        if !added {
            break;
        }
        let before = mesh.node_count();
        mesh = builder.build()?;
        // builder keeps insertion order, so earlier nodes keep their indices
        fresh = (before..mesh.node_count()).collect();
    }
    check_coverage(&mesh, &regions)?;
    Ok(mesh)
}
