use thiserror::Error;

use crate::geometry::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map evaluated at or near its pole at {point:?} (|denominator| = {denominator:e})")]
    Pole { point: Point, denominator: f64 },

    #[error("point {point:?} lies outside the conformal domain of the map")]
    Domain { point: Point },

    #[error("cannot compose: map into vertex {into} followed by map out of vertex {out_of}")]
    Incidence { out_of: usize, into: usize },

    #[error("boundary sample {point:?} of region {vertex} is not covered by the mesh")]
    Coverage { point: Point, vertex: usize },

    #[error("degenerate or invalid mesh geometry: {0}")]
    Geometry(String),

    #[error("point {point:?} lies outside every simplex (best barycentric minimum {best:e})")]
    NotFound { point: Point, best: f64 },

    #[error("interpolation error factor {err:.6} is not below 1; reduce the mesh size below {suggested_h:.3e}")]
    ErrTooLarge { err: f64, suggested_h: f64 },

    #[error("parameter out of admissible range: {0}")]
    Range(String),

    #[error("unsupported dimension {0}; only 2 and 3 are available")]
    UnsupportedDimension(usize),

    #[error("witness entry {index} is not strictly positive ({value:e})")]
    Positivity { index: usize, value: f64 },

    #[error("no certified bracket after {evaluations} evaluations: {reason}")]
    BracketFailure { evaluations: usize, reason: String },

    #[error("images of maps {first} and {second} overlap")]
    Overlap { first: usize, second: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
