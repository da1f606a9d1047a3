//! Matrix Lie algebras and groups.

mod algebra;
mod chart;
mod constants;
pub mod expm;
mod recognition;
pub mod registry;

pub use algebra::{Constraint, Coords, ExpForm, GroupPredicate, LieAlgebra, CLOSURE_TOL};
pub use chart::{maurer_cartan_defect, NamedChart};
pub use constants::{jacobi_defect, transform_constants, StructureConstants};
pub use recognition::{affine_surface_constants, affine_surface_coframe, named_constants, recognize, Recognition};
