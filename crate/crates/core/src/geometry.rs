//! Points, balls and low-discrepancy sampling in the plane and in space.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A point of R^2 or R^3.
///
/// Planar points keep a zero third coordinate so that norms and distances
/// need no dimension dispatch.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: [f64; 3],
    pub dim: u8,
}

impl Point {
    pub const fn new2(x: f64, y: f64) -> Self {
        Self { coords: [x, y, 0.0], dim: 2 }
    }

    pub const fn new3(x: f64, y: f64, z: f64) -> Self {
        Self { coords: [x, y, z], dim: 3 }
    }

    pub fn origin(dim: usize) -> Self {
        Self { coords: [0.0; 3], dim: dim as u8 }
    }

    /// Builds a point from a slice of length 2 or 3.
    pub fn from_slice(v: &[f64]) -> Self {
        match v.len() {
            2 => Self::new2(v[0], v[1]),
            3 => Self::new3(v[0], v[1], v[2]),
            n => panic!("points live in R^2 or R^3, got {n} coordinates"),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.coords[2]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    #[inline]
    pub fn add(&self, o: &Point) -> Point {
        Point {
            coords: [self.coords[0] + o.coords[0], self.coords[1] + o.coords[1], self.coords[2] + o.coords[2]],
            dim: self.dim,
        }
    }

    #[inline]
    pub fn sub(&self, o: &Point) -> Point {
        Point {
            coords: [self.coords[0] - o.coords[0], self.coords[1] - o.coords[1], self.coords[2] - o.coords[2]],
            dim: self.dim,
        }
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Point {
        Point { coords: [self.coords[0] * s, self.coords[1] * s, self.coords[2] * s], dim: self.dim }
    }

    #[inline]
    pub fn dot(&self, o: &Point) -> f64 {
        self.coords[0] * o.coords[0] + self.coords[1] * o.coords[1] + self.coords[2] * o.coords[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(&self, o: &Point) -> f64 {
        self.sub(o).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_slice())
    }
}

/// Shape of a vertex region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegionKind {
    /// Closed Euclidean ball.
    Ball { center: Point, radius: f64 },
}

/// A compact vertex region `X_v`, or its conformal-extension domain `W_v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub vertex: usize,
}

impl Region {
    pub fn ball(center: Point, radius: f64, vertex: usize) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Self { kind: RegionKind::Ball { center, radius }, vertex }
    }

    pub fn center(&self) -> Point {
        match self.kind {
            RegionKind::Ball { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match self.kind {
            RegionKind::Ball { radius, .. } => radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().dim()
    }

    /// Signed distance: negative inside, zero on the boundary.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        p.dist(&self.center()) - self.radius()
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }

    /// Euclidean distance from a point to the region (zero inside).
    pub fn distance(&self, p: &Point) -> f64 {
        self.signed_distance(p).max(0.0)
    }

    pub fn dilated(&self, delta: f64) -> Region {
        Region::ball(self.center(), self.radius() + delta, self.vertex)
    }

    /// Distance from this region to the boundary of `outer`, assuming
    /// `self` is contained in `outer`.
    pub fn distance_to_boundary_of(&self, outer: &Region) -> f64 {
        outer.radius() - self.center().dist(&outer.center()) - self.radius()
    }

    /// Low-discrepancy samples: `count` points split between the boundary
    /// sphere and the interior.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<Point> {
        let boundary = count / 2;
        let interior = count - boundary;
        let mut out = Vec::with_capacity(count);
        let c = self.center();
        let r = self.radius();
        let dim = self.dim();
        let offset = ((seed % (1 << 32)) as usize).wrapping_mul(7919);
        for k in 0..boundary {
            let u = unit_sphere_point(dim, k + 1 + offset);
            out.push(c.add(&u.scale(r)));
        }
        for k in 0..interior {
            let u = unit_sphere_point(dim, k + 1 + offset);
            // radial coordinate distributed for uniform volume
            let q = radical_inverse(k + 1 + offset, if dim == 2 { 5 } else { 7 });
            let rad = r * q.powf(1.0 / dim as f64);
            out.push(c.add(&u.scale(rad)));
        }
        out
    }
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Halton-driven point on the unit circle or unit sphere.
pub fn unit_sphere_point(dim: usize, index: usize) -> Point {
    let a = radical_inverse(index, 2);
    if dim == 2 {
        let th = std::f64::consts::TAU * a;
        Point::new2(th.cos(), th.sin())
    } else {
        let b = radical_inverse(index, 3);
        let z = 2.0 * a - 1.0;
        let phi = std::f64::consts::TAU * b;
        let s = (1.0 - z * z).max(0.0).sqrt();
        Point::new3(s * phi.cos(), s * phi.sin(), z)
    }
}
