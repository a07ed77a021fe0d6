//! Lattice tools for quantized vortex lines in three-dimensional
//! Ginzburg-Landau fields: discrete exterior calculus, vorticity
//! extraction, rational piecewise-linear approximation, line
//! discretization, minimal connections and flat norms, potentials, and
//! recovery constructions with energy sweeps.

pub mod binio;
pub mod dec;
pub mod error;
pub mod extract;
pub mod field;
pub mod geom;
pub mod grid;
pub mod lines;
pub mod mincon;
pub mod pl;
pub mod potentials;
pub mod rational;
pub mod recovery;
pub mod vortex;

pub use error::{Error, Result};
pub use geom::{Segment, Vec3};
pub use grid::{Boundary, ComplexField, Form0, Form1, Form2, Form3, GridSpec};
pub use vortex::VortexSystem;
