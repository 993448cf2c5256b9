//! Vector drawings of the first generations `phi_w(X)`, `|w| <= depth`.
//!
//! Images of balls under Mobius maps and sphere inversions are drawn as
//! exact circles; polynomial images as sampled closed polylines. Spatial
//! systems are projected onto the first two coordinates.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::system::SystemSpec;

/// Upper limit on the number of drawn images.
pub const MAX_SHAPES: usize = 500_000;

/// Boundary samples per polyline.
pub const POLYLINE_SAMPLES: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Circle { center: Point, radius: f64 },
    Polyline(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    /// `levels[k]` holds the images of generation `k`; level 0 is the vertex regions.
    pub levels: Vec<Vec<(usize, Shape)>>,
}

impl Figure {
    pub fn count(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, |l| l.len())
    }

    pub fn circles(&self) -> usize {
        self.levels.iter().flatten().filter(|(_, s)| matches!(s, Shape::Circle { .. })).count()
    }

    pub fn polylines(&self) -> usize {
        self.levels.iter().flatten().filter(|(_, s)| matches!(s, Shape::Polyline(_))).count()
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (_, s) in self.levels.iter().flatten() {
            match s {
                Shape::Circle { center, radius } => {
                    b.0 = b.0.min(center.x() - radius);
                    b.1 = b.1.min(center.y() - radius);
                    b.2 = b.2.max(center.x() + radius);
                    b.3 = b.3.max(center.y() + radius);
                }
                Shape::Polyline(pts) => {
                    for p in pts {
                        b.0 = b.0.min(p.x());
                        b.1 = b.1.min(p.y());
                        b.2 = b.2.max(p.x());
                        b.3 = b.3.max(p.y());
                    }
                }
            }
        }
        b
    }

    pub fn to_svg(&self) -> String {
        let (x0, y0, x1, y1) = self.bounds();
        let pad = 0.03 * (x1 - x0).max(y1 - y0).max(1e-9);
        let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
        let stroke = 0.002 * w.max(h);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {w} {h}\" width=\"800\" height=\"{}\">",
            x0 - pad,
            -(y1 + pad),
            (800.0 * h / w).round()
        );
        let colors = ["#222222", "#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        for (level, shapes) in self.levels.iter().enumerate() {
            let color = colors[level % colors.len()];
            let width = stroke / (1.0 + level as f64);
            let _ = writeln!(s, "<g fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" data-level=\"{level}\">");
            for (_, shape) in shapes {
                match shape {
                    Shape::Circle { center, radius } => {
                        let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", center.x(), -center.y(), radius);
                    }
                    Shape::Polyline(pts) => {
                        let _ = write!(s, "<polygon points=\"");
                        for p in pts {
                            let _ = write!(s, "{},{} ", p.x(), -p.y());
                        }
                        let _ = writeln!(s, "\"/>");
                    }
                }
            }
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}

fn region_polyline(center: &Point, radius: f64) -> Vec<Point> {
    (0..POLYLINE_SAMPLES)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / POLYLINE_SAMPLES as f64;
            Point::new2(center.x() + radius * a.cos(), center.y() + radius * a.sin())
        })
        .collect()
}

/// Images of the vertex regions under all admissible words up to `depth`.
pub fn build_figure(spec: &SystemSpec, depth: usize) -> Result<Figure> {
    if spec.alphabet.tail.is_some() && depth > 4 {
        return Err(Error::Range(format!("depth {depth} exceeds 4 for a truncated infinite alphabet")));
    }
    let level0: Vec<(usize, Shape)> = spec
        .vertices
        .iter()
        .enumerate()
        .map(|(v, r)| (v, Shape::Circle { center: r.x.center(), radius: r.x.radius() }))
        .collect();
    let mut levels = vec![level0];
    let mut total = levels[0].len();
    for _ in 0..depth {
        let prev = levels.last().unwrap();
        let mut next = Vec::new();
        for (vertex, shape) in prev {
            for (_, m) in spec.maps_from(*vertex) {
                let image = match shape {
                    Shape::Circle { center, radius } => match m.image_ball(center, *radius) {
                        Some(b) if b.exact => Shape::Circle { center: b.center, radius: b.radius },
                        _ => Shape::Polyline(
                            region_polyline(center, *radius).iter().map(|p| m.apply(p)).collect::<Result<_>>()?,
                        ),
                    },
                    Shape::Polyline(pts) => Shape::Polyline(pts.iter().map(|p| m.apply(p)).collect::<Result<_>>()?),
                };
                next.push((m.target, image));
            }
        }
        total += next.len();
        if total > MAX_SHAPES {
            return Err(Error::Range(format!("more than {MAX_SHAPES} images; lower the depth")));
        }
        levels.push(next);
    }
    Ok(Figure { levels })
}

/// Writes the drawing of generations `0..=depth` as SVG.
pub fn emit_figure(spec: &SystemSpec, depth: usize, path: &Path) -> Result<Figure> {
    let fig = build_figure(spec, depth)?;
    std::fs::write(path, fig.to_svg())?;
    Ok(fig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{abc_system, apollonian_system, schottky2d_system, ApollonianRange};

    #[test]
    fn schottky_first_generation() {
        let spec = schottky2d_system();
        let fig = build_figure(&spec, 1).unwrap();
        assert_eq!(fig.count(0), 3);
        assert_eq!(fig.count(1), 6);
        assert_eq!(fig.polylines(), 0);
        // every image sits inside its target disk
        for (v, s) in &fig.levels[1] {
            let Shape::Circle { center, radius } = s else { panic!() };
            let x = &spec.vertices[*v].x;
            assert!(center.dist(&x.center()) + radius <= x.radius() + 1e-12);
        }
    }

    #[test]
    fn apollonian_first_generation_count() {
        let spec = apollonian_system(&[1, 2, 3, 4, 5, 6], ApollonianRange::Finite(20)).unwrap();
        let fig = build_figure(&spec, 1).unwrap();
        assert_eq!(fig.count(1), 120);
        assert_eq!(fig.circles(), 121);
    }

    #[test]
    fn depth_zero_is_the_regions() {
        let fig = build_figure(&schottky2d_system(), 0).unwrap();
        assert_eq!(fig.levels.len(), 1);
        assert_eq!(fig.count(0), 3);
        let svg = fig.to_svg();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn polynomial_images_are_polylines() {
        let fig = build_figure(&abc_system(), 2).unwrap();
        assert_eq!(fig.count(1), 3);
        assert_eq!(fig.count(2), 9);
        assert_eq!(fig.polylines(), 12);
        assert_eq!(fig.to_svg().matches("<polygon").count(), 12);
    }

    #[test]
    fn writes_file() {
        let dir = std::env::temp_dir().join(format!("fracdim-fig-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.svg");
        emit_figure(&schottky2d_system(), 2, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("<circle").count(), 3 + 6 + 12);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
