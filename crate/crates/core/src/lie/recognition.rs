//! Recognizing an algebra from its structure equations by a change of coframe.

use nalgebra::DMatrix;

use super::constants::{transform_constants, StructureConstants};
use super::registry;
use crate::error::{Error, Result};

/// Structure equations of a torsion-free affine surface with normalized
/// coframe, in the order `(σ¹, σ², γ)`:
///
/// `dσ¹ = 2σ¹∧σ²`, `dσ² = −γ∧σ¹ − ⅓σ¹∧σ²`, `dγ = −γ∧(⅓σ¹ + 2σ²)`.
pub fn affine_surface_constants() -> StructureConstants {
    let third = 1.0 / 3.0;
    StructureConstants::from_structure_equations(
        3,
        &[(0, 0, 1, 2.0), (1, 2, 0, -1.0), (1, 0, 1, -third), (2, 2, 0, -third), (2, 2, 1, -2.0)],
    )
    .expect("indices are in range")
}

/// The coframe substitution `ξ = σ¹`, `ζ = σ² + ⅙σ¹`, `η = γ`, rows in the
/// order `(ξ, ζ, η)` that matches the `X, H, Y` basis of `sl2`.
pub fn affine_surface_coframe() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 1.0 / 6.0, 1.0, 0.0, 0.0, 0.0, 1.0])
}

/// Constants of a built-in algebra, or of `affine_surface`.
pub fn named_constants(name: &str) -> Result<StructureConstants> {
    match name {
        "affine_surface" => Ok(affine_surface_constants()),
        other => registry::algebra(other)?.structure_constants(),
    }
}

#[derive(Debug, Clone)]
pub struct Recognition {
    pub transformed: StructureConstants,
    pub target: StructureConstants,
    pub max_error: f64,
}

/// Rewrites `c` in the coframe `θ' = Q θ` and compares with `target`.
///
/// New forms are rows of `Q`; the dual basis is `e' = e Q⁻¹`.
pub fn recognize(c: &StructureConstants, coframe: &DMatrix<f64>, target: &StructureConstants) -> Result<Recognition> {
    if target.dim() != c.dim() {
        return Err(Error::BadParams(format!("dimensions differ: {} vs {}", c.dim(), target.dim())));
    }
    let p = coframe
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("coframe substitution".into()))?;
    let transformed = transform_constants(c, &p)?;
    let max_error = transformed.max_abs_diff(target);
    Ok(Recognition { transformed, target: target.clone(), max_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::jacobi_defect;

    #[test]
    fn affine_surface_is_a_lie_algebra() {
        let c = affine_surface_constants();
        assert!(jacobi_defect(&c) < 1e-12);
        assert_eq!(c.get(0, 0, 1), -2.0);
        assert_eq!(c.get(1, 0, 2), -1.0);
        assert_eq!(c.get(2, 1, 2), -2.0);
    }

    #[test]
    fn identity_coframe_recognizes_itself() {
        let c = named_constants("sl2").unwrap();
        let r = recognize(&c, &DMatrix::identity(3, 3), &c).unwrap();
        assert_eq!(r.max_error, 0.0);
    }

    #[test]
    fn reflected_curvature_form_lands_on_sl2() {
        // Hand substitution: with η = −γ the equations become
        // dξ = −2ζ∧ξ, dζ = −ξ∧η, dη = 2ζ∧η.
        let mut q = affine_surface_coframe();
        q[(2, 2)] = -1.0;
        let r = recognize(&affine_surface_constants(), &q, &named_constants("sl2").unwrap()).unwrap();
        assert!(r.max_error < 1e-12, "{}", r.max_error);
    }
}
