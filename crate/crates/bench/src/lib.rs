//! Shared fixtures for the benchmarks.

use cartan_core::gauge::CartanGauge;
use cartan_core::geometries::{levi_civita_gauge, surface};
use cartan_core::lie::registry;
use cartan_core::lie_equation::FnSignal;
use cartan_core::{Coords, LieAlgebra};
use nalgebra::DMatrix;

/// A generic 4×4 matrix with no special structure, so the Padé path runs.
pub fn dense4() -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| ((i * 4 + j) as f64 * 0.37).sin() * 0.8)
}

pub fn so3() -> LieAlgebra {
    registry::algebra("so3").expect("builtin")
}

/// Smooth rotation-rate signal on [0, 10].
pub fn so3_signal() -> FnSignal<impl Fn(f64) -> Coords + Send + Sync> {
    FnSignal::new(3, (0.0, 10.0), |t: f64| Coords::from_vec(vec![t.sin(), (2.0 * t).cos(), 0.5 + 0.1 * t]))
}

pub fn sphere_gauge() -> CartanGauge {
    levi_civita_gauge(&surface("sphere_polar", &[]).expect("builtin")).expect("Riemannian")
}
