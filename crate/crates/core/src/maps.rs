//! Conformal contractions and their exact derivative norms.
//!
//! Every map kind carries a closed-form derivative so that the transfer
//! operator weights are evaluated without numerical differentiation. New
//! kinds are added as enum variants together with `eval`, `image_ball` and
//! `sup_derivative` arms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Region};

pub const DEFAULT_POLE_GUARD: f64 = 1e-14;

pub type Matrix3 = [[f64; 3]; 3];

pub const IDENTITY3: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MapKind {
    /// `z -> (a w + b) / (c w + d)` with `w = conj(z)` when `conjugate` is set.
    /// Matrix entries are stored row-major as `[a, b, c, d]`.
    Mobius2d { matrix: [Complex64; 4], conjugate: bool },
    /// `x -> post + O (c + r^2 (y - c) / |y - c|^2)` where `y = x + pre`.
    InversionNd { center: Point, radius: f64, pre_translate: Point, post_translate: Point, orthogonal: Matrix3 },
    /// `z -> a z + b + c z^2`.
    Polynomial2d { a: Complex64, b: Complex64, c: Complex64 },
    /// `maps[0] o maps[1] o ... o maps[k-1]`.
    Composite(Vec<ConformalMap>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalMap {
    pub kind: MapKind,
    pub source: usize,
    pub target: usize,
    /// Conformal-extension domain of the source vertex, checked by [`ConformalMap::apply`].
    pub domain: Option<Region>,
    pub pole_guard: f64,
}

/// A ball that encloses (or, when `exact`, equals) the image of a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageBall {
    pub center: Point,
    pub radius: f64,
    pub exact: bool,
}

#[inline]
fn to_complex(p: &Point) -> Complex64 {
    Complex64::new(p.coords[0], p.coords[1])
}

#[inline]
fn from_complex(z: Complex64) -> Point {
    Point::new2(z.re, z.im)
}

fn mat_vec(m: &Matrix3, v: &Point) -> Point {
    let c = &v.coords;
    Point {
        coords: [
            m[0][0] * c[0] + m[0][1] * c[1] + m[0][2] * c[2],
            m[1][0] * c[0] + m[1][1] * c[1] + m[1][2] * c[2],
            m[2][0] * c[0] + m[2][1] * c[1] + m[2][2] * c[2],
        ],
        dim: v.dim,
    }
}

fn mat_mul2(x: &[Complex64; 4], y: &[Complex64; 4]) -> [Complex64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

impl ConformalMap {
    fn with_kind(kind: MapKind, source: usize, target: usize) -> Self {
        Self { kind, source, target, domain: None, pole_guard: DEFAULT_POLE_GUARD }
    }

    pub fn mobius(matrix: [Complex64; 4], conjugate: bool, source: usize, target: usize) -> Self {
        let det = matrix[0] * matrix[3] - matrix[1] * matrix[2];
        assert!(det.norm() > 0.0, "Mobius matrix must be invertible");
        Self::with_kind(MapKind::Mobius2d { matrix, conjugate }, source, target)
    }

    /// Plain inversion in the sphere of the given center and radius.
    pub fn inversion(center: Point, radius: f64, source: usize, target: usize) -> Self {
        let zero = Point::origin(center.dim());
        Self::inversion_general(center, radius, zero, zero, IDENTITY3, source, target)
    }

    pub fn inversion_general(
        center: Point,
        radius: f64,
        pre_translate: Point,
        post_translate: Point,
        orthogonal: Matrix3,
        source: usize,
        target: usize,
    ) -> Self {
        assert!(radius > 0.0);
        Self::with_kind(
            MapKind::InversionNd { center, radius, pre_translate, post_translate, orthogonal },
            source,
            target,
        )
    }

    pub fn polynomial(a: Complex64, b: Complex64, c: Complex64, source: usize, target: usize) -> Self {
        Self::with_kind(MapKind::Polynomial2d { a, b, c }, source, target)
    }

    pub fn with_domain(mut self, domain: Region) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_pole_guard(mut self, guard: f64) -> Self {
        self.pole_guard = guard;
        if let MapKind::Composite(parts) = &mut self.kind {
            for p in parts.iter_mut() {
                *p = p.clone().with_pole_guard(guard);
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MapKind::Mobius2d { .. } | MapKind::Polynomial2d { .. } => 2,
            MapKind::InversionNd { center, .. } => center.dim(),
            MapKind::Composite(parts) => parts[0].dim(),
        }
    }

    /// Image of `x` and the operator norm of the derivative at `x`.
    pub fn eval(&self, x: &Point) -> Result<(Point, f64)> {
        match &self.kind {
            MapKind::Mobius2d { matrix, conjugate } => {
                let [a, b, c, d] = *matrix;
                let mut z = to_complex(x);
                if *conjugate {
                    z = z.conj();
                }
                let den = c * z + d;
                let den_abs = den.norm();
                if den_abs < self.pole_guard {
                    return Err(Error::Pole { point: *x, denominator: den_abs });
                }
                let det = a * d - b * c;
                Ok((from_complex((a * z + b) / den), det.norm() / (den_abs * den_abs)))
            }
            MapKind::InversionNd { center, radius, pre_translate, post_translate, orthogonal } => {
                let y = x.add(pre_translate).sub(center);
                let d2 = y.norm_sq();
                if d2.sqrt() < self.pole_guard {
                    return Err(Error::Pole { point: *x, denominator: d2.sqrt() });
                }
                let r2 = radius * radius;
                let inv = center.add(&y.scale(r2 / d2));
                Ok((post_translate.add(&mat_vec(orthogonal, &inv)), r2 / d2))
            }
            MapKind::Polynomial2d { a, b, c } => {
                let z = to_complex(x);
                let w = *a * z + *b + *c * z * z;
                Ok((from_complex(w), (*a + 2.0 * *c * z).norm()))
            }
            MapKind::Composite(parts) => {
                let mut p = *x;
                let mut deriv = 1.0;
                for m in parts.iter().rev() {
                    let (q, d) = m.eval(&p)?;
                    p = q;
                    deriv *= d;
                }
                Ok((p, deriv))
            }
        }
    }

    fn check_domain(&self, x: &Point) -> Result<()> {
        match &self.domain {
            Some(w) if !w.contains(x, 0.0) => Err(Error::Domain { point: *x }),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.check_domain(x)?;
        Ok(self.eval(x)?.0)
    }

    pub fn derivative_norm(&self, x: &Point) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval(x)?.1)
    }

    /// Exact image ball for Mobius and inversion kinds; an enclosing ball
    /// for polynomial kinds. `None` when the pole lies in the closed ball.
    pub fn image_ball(&self, center: &Point, radius: f64) -> Option<ImageBall> {
        match &self.kind {
            MapKind::Mobius2d { matrix, conjugate } => {
                let [a, b, c, d] = *matrix;
                let mut p = to_complex(center);
                if *conjugate {
                    p = p.conj();
                }
                if c.norm() == 0.0 {
                    let w = (a * p + b) / d;
                    return Some(ImageBall { center: from_complex(w), radius: (a / d).norm() * radius, exact: true });
                }
                let pole = -d / c;
                let q = p - pole;
                let gap = q.norm_sqr() - radius * radius;
                if gap <= 0.0 {
                    return None;
                }
                // z -> 1/(z - pole) maps the ball to B(conj(q)/gap, radius/gap)
                let inv_center = q.conj() / gap;
                let inv_radius = radius / gap;
                let det = a * d - b * c;
                let scale = -det / (c * c);
                Some(ImageBall {
                    center: from_complex(a / c + scale * inv_center),
                    radius: scale.norm() * inv_radius,
                    exact: true,
                })
            }
            MapKind::InversionNd { center: ic, radius: ir, pre_translate, post_translate, orthogonal } => {
                let q = center.add(pre_translate).sub(ic);
                let gap = q.norm_sq() - radius * radius;
                if gap <= 0.0 {
                    return None;
                }
                let r2 = ir * ir;
                let img = ic.add(&q.scale(r2 / gap));
                Some(ImageBall {
                    center: post_translate.add(&mat_vec(orthogonal, &img)),
                    radius: r2 * radius / gap,
                    exact: true,
                })
            }
            MapKind::Polynomial2d { a, b, c } => {
                let p = to_complex(center);
                let w = *a * p + *b + *c * p * p;
                let lin = (*a + 2.0 * *c * p).norm();
                Some(ImageBall { center: from_complex(w), radius: lin * radius + c.norm() * radius * radius, exact: false })
            }
            MapKind::Composite(parts) => {
                let mut ball = ImageBall { center: *center, radius, exact: true };
                for m in parts.iter().rev() {
                    let next = m.image_ball(&ball.center, ball.radius)?;
                    ball = ImageBall { exact: ball.exact && next.exact, ..next };
                }
                Some(ball)
            }
        }
    }

    /// Upper bound for the derivative norm over a closed ball (exact for
    /// single Mobius, inversion and polynomial maps).
    pub fn sup_derivative(&self, center: &Point, radius: f64) -> Option<f64> {
        match &self.kind {
            MapKind::Mobius2d { matrix, conjugate } => {
                let [a, b, c, d] = *matrix;
                let det = (a * d - b * c).norm();
                if c.norm() == 0.0 {
                    return Some(det / d.norm_sqr());
                }
                let mut p = to_complex(center);
                if *conjugate {
                    p = p.conj();
                }
                let gap = (p + d / c).norm() - radius;
                if gap <= 0.0 {
                    return None;
                }
                let m = c.norm() * gap;
                Some(det / (m * m))
            }
            MapKind::InversionNd { center: ic, radius: ir, pre_translate, .. } => {
                let gap = center.add(pre_translate).dist(ic) - radius;
                if gap <= 0.0 {
                    return None;
                }
                Some(ir * ir / (gap * gap))
            }
            MapKind::Polynomial2d { a, c, .. } => {
                let p = to_complex(center);
                Some((*a + 2.0 * *c * p).norm() + 2.0 * c.norm() * radius)
            }
            MapKind::Composite(parts) => {
                let mut ball = ImageBall { center: *center, radius, exact: true };
                let mut bound = 1.0;
                for m in parts.iter().rev() {
                    bound *= m.sup_derivative(&ball.center, ball.radius)?;
                    ball = m.image_ball(&ball.center, ball.radius)?;
                }
                Some(bound)
            }
        }
    }

    /// Mobius matrix and conjugation flag, when the map is a single Mobius map.
    pub fn as_mobius(&self) -> Option<([Complex64; 4], bool)> {
        match &self.kind {
            MapKind::Mobius2d { matrix, conjugate } => Some((*matrix, *conjugate)),
            _ => None,
        }
    }
}

/// `compose(&[a, b, c])` is `a o b o c`. Consecutive maps must satisfy the
/// incidence rule: the map applied first lands in the source vertex of the
/// map applied next.
pub fn compose(maps: &[ConformalMap]) -> Result<ConformalMap> {
    assert!(!maps.is_empty(), "compose needs at least one map");
    for pair in maps.windows(2) {
        if pair[1].target != pair[0].source {
            return Err(Error::Incidence { out_of: pair[0].source, into: pair[1].target });
        }
    }
    let source = maps[maps.len() - 1].source;
    let target = maps[0].target;
    let domain = maps[maps.len() - 1].domain;
    let pole_guard = maps.iter().map(|m| m.pole_guard).fold(f64::INFINITY, f64::min);

    if maps.iter().all(|m| m.as_mobius().is_some()) {
        let (mut acc, mut flag) = maps[0].as_mobius().unwrap();
        for m in &maps[1..] {
            let (mut next, f) = m.as_mobius().unwrap();
            if flag {
                for e in next.iter_mut() {
                    *e = e.conj();
                }
            }
            acc = mat_mul2(&acc, &next);
            flag ^= f;
        }
        return Ok(ConformalMap { kind: MapKind::Mobius2d { matrix: acc, conjugate: flag }, source, target, domain, pole_guard });
    }

    let mut parts = Vec::new();
    for m in maps {
        match &m.kind {
            MapKind::Composite(inner) => parts.extend(inner.iter().cloned()),
            _ => parts.push(m.clone()),
        }
    }
    Ok(ConformalMap { kind: MapKind::Composite(parts), source, target, domain, pole_guard })
}
