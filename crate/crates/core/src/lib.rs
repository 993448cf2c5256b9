//! Certified two-sided bounds for the Hausdorff dimension of limit sets of
//! conformal graph-directed Markov systems in the plane and in space.

pub mod assembly;
pub mod catalog;
pub mod constants;
pub mod error;
pub mod figure;
pub mod geometry;
pub mod maps;
pub mod mesh;
pub mod record;
pub mod solver;
pub mod sparse;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
pub use geometry::{Point, Region};
pub use maps::{compose, ConformalMap};
pub use system::{hutchinson_dimension, validate_system, Alphabet, SystemSpec};
