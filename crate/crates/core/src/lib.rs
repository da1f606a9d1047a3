//! Numerical toolkit for Cartan geometries modelled on matrix Lie groups.

pub mod error;
pub mod flows;
pub mod frames;
pub mod gauge;
pub mod geometries;
pub mod lie;
pub mod lie_equation;
pub mod spline;
pub mod transport;

pub use error::{Error, Result};
pub use lie::{Coords, LieAlgebra, StructureConstants};
