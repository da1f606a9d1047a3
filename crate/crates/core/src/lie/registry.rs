//! Built-in algebras addressable by name.
//!
//! The surface models `e2`, `o3` and `o21` share the basis order
//! (rotation, e₁, e₂). Their rotation generator is `E₁₂ − E₂₁`, the
//! clockwise unit, so that the connection coefficient along it is the
//! Levi-Civita form γ with `dσ¹ = −γ∧σ²`, `dσ² = γ∧σ¹`, `dγ = K σ¹∧σ²`.
//! `se2` keeps the counter-clockwise generator `E₂₁ − E₁₂`.

use nalgebra::DMatrix;

use super::algebra::{Constraint, ExpForm, GroupPredicate, LieAlgebra};
use crate::error::{Error, Result};

pub const NAMES: [&str; 10] = ["abelian2", "heis3", "aff1", "se2", "se3", "so3", "sl2", "e2", "o3", "o21"];

fn unit(m: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(m, m);
    e[(i, j)] = 1.0;
    e
}

fn skew(m: usize, i: usize, j: usize) -> DMatrix<f64> {
    unit(m, i, j) - unit(m, j, i)
}

fn sym(m: usize, i: usize, j: usize) -> DMatrix<f64> {
    unit(m, i, j) + unit(m, j, i)
}

/// Abelian `ℝⁿ` realized as diagonal `n × n` matrices.
pub fn abelian(n: usize) -> Result<LieAlgebra> {
    let basis = (0..n).map(|i| unit(n, i, i)).collect();
    LieAlgebra::new(&format!("abelian{n}"), basis, GroupPredicate(vec![Constraint::Diagonal]))
}

pub fn algebra(name: &str) -> Result<LieAlgebra> {
    let alg = match name {
        "abelian2" => abelian(2)?,
        "heis3" => LieAlgebra::new(
            name,
            vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)],
            GroupPredicate(vec![Constraint::UnipotentUpper]),
        )?,
        "aff1" => LieAlgebra::new(
            name,
            vec![unit(2, 0, 0), unit(2, 0, 1)],
            GroupPredicate(vec![Constraint::AffineBottomRow]),
        )?,
        "se2" => LieAlgebra::new(
            name,
            vec![skew(3, 1, 0), unit(3, 0, 2), unit(3, 1, 2)],
            GroupPredicate(vec![Constraint::OrthogonalBlock { size: 2 }, Constraint::AffineBottomRow]),
        )?
        .with_exp_form(ExpForm::Euclidean2),
        "se3" => LieAlgebra::new(
            name,
            vec![skew(4, 2, 1), skew(4, 0, 2), skew(4, 1, 0), unit(4, 0, 3), unit(4, 1, 3), unit(4, 2, 3)],
            GroupPredicate(vec![Constraint::OrthogonalBlock { size: 3 }, Constraint::AffineBottomRow]),
        )?
        .with_exp_form(ExpForm::Euclidean3),
        "so3" => LieAlgebra::new(
            name,
            vec![skew(3, 2, 1), skew(3, 0, 2), skew(3, 1, 0)],
            GroupPredicate(vec![Constraint::OrthogonalBlock { size: 3 }]),
        )?
        .with_exp_form(ExpForm::Rotation3),
        "sl2" => LieAlgebra::new(
            name,
            vec![unit(2, 0, 1), unit(2, 0, 0) - unit(2, 1, 1), unit(2, 1, 0)],
            GroupPredicate(vec![Constraint::UnitDeterminant]),
        )?,
        "e2" => LieAlgebra::new(
            name,
            vec![skew(3, 0, 1), unit(3, 0, 2), unit(3, 1, 2)],
            GroupPredicate(vec![Constraint::OrthogonalBlock { size: 2 }, Constraint::AffineBottomRow]),
        )?
        .with_exp_form(ExpForm::Euclidean2),
        "o3" => LieAlgebra::new(
            name,
            vec![skew(3, 0, 1), skew(3, 0, 2), skew(3, 1, 2)],
            GroupPredicate(vec![Constraint::OrthogonalBlock { size: 3 }]),
        )?
        .with_exp_form(ExpForm::Rotation3),
        "o21" => LieAlgebra::new(
            name,
            vec![skew(3, 0, 1), sym(3, 0, 2), sym(3, 1, 2)],
            GroupPredicate(vec![Constraint::PseudoOrthogonal { signature: vec![1.0, 1.0, -1.0] }]),
        )?,
        other => return Err(Error::UnknownAlgebra(other.to_string())),
    };
    Ok(alg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{jacobi_defect, Coords};
    use proptest::prelude::*;

    #[test]
    fn every_builtin_is_a_lie_algebra() {
        for name in NAMES {
            let alg = algebra(name).unwrap();
            let c = alg.structure_constants().unwrap();
            assert!(jacobi_defect(&c) < 1e-12, "{name}");
        }
        assert!(matches!(algebra("g2"), Err(Error::UnknownAlgebra(_))));
    }

    #[test]
    fn surface_model_brackets() {
        // [R, e1] = -e2 and [R, e2] = e1 in all three surface models.
        for name in ["e2", "o3", "o21"] {
            let alg = algebra(name).unwrap();
            let b1 = alg.bracket(&alg.unit(0), &alg.unit(1)).unwrap();
            let b2 = alg.bracket(&alg.unit(0), &alg.unit(2)).unwrap();
            assert!((b1 + alg.unit(2)).amax() < 1e-15, "{name}");
            assert!((b2 - alg.unit(1)).amax() < 1e-15, "{name}");
        }
        // [e1, e2] = 0, -R, +R: flat, sphere, hyperbolic.
        let signs = [("e2", 0.0), ("o3", -1.0), ("o21", 1.0)];
        for (name, s) in signs {
            let alg = algebra(name).unwrap();
            let b = alg.bracket(&alg.unit(1), &alg.unit(2)).unwrap();
            assert!((b - alg.unit(0) * s).amax() < 1e-15, "{name}");
        }
    }

    #[test]
    fn exp_of_sl2_raising_operator() {
        let sl2 = algebra("sl2").unwrap();
        let g = sl2.exp(&sl2.unit(0), 1.75);
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, 1.75, 0.0, 1.0]));
        assert_eq!(sl2.exp(&sl2.unit(1), 0.0), DMatrix::identity(2, 2));
    }

    #[test]
    fn so3_quarter_turn_about_third_axis() {
        let so3 = algebra("so3").unwrap();
        let g = so3.exp(&so3.unit(2), std::f64::consts::FRAC_PI_2);
        // Oracle: 30-term Taylor series.
        let a = so3.to_matrix(&so3.unit(2)) * std::f64::consts::FRAC_PI_2;
        let mut sum = DMatrix::identity(3, 3);
        let mut term = DMatrix::identity(3, 3);
        for k in 1..30 {
            term = &term * &a / k as f64;
            sum += &term;
        }
        assert!((&g - &sum).amax() < 1e-14);
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((g - expected).amax() < 1e-15);
    }

    fn coords(n: usize) -> impl Strategy<Value = Coords> {
        prop::collection::vec(-2.0..2.0f64, n).prop_map(Coords::from_vec)
    }

    proptest! {
        #[test]
        fn bracket_is_bilinear(
            idx in 0usize..NAMES.len(),
            raw in prop::collection::vec(-2.0..2.0f64, 18),
            a in -2.0..2.0f64,
            b in -2.0..2.0f64,
        ) {
            let alg = algebra(NAMES[idx]).unwrap();
            let n = alg.dim();
            let x = Coords::from_column_slice(&raw[0..n]);
            let y = Coords::from_column_slice(&raw[n..2 * n]);
            let z = Coords::from_column_slice(&raw[2 * n..3 * n]);
            let lhs = alg.bracket(&(&x * a + &y * b), &z).unwrap();
            let rhs = alg.bracket(&x, &z).unwrap() * a + alg.bracket(&y, &z).unwrap() * b;
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }

        #[test]
        fn one_parameter_subgroup_law(idx in 0usize..NAMES.len(), s in -2.5..2.5f64, t in -2.5..2.5f64, seed in coords(6)) {
            let alg = algebra(NAMES[idx]).unwrap();
            let a = Coords::from_iterator(alg.dim(), seed.iter().copied().take(alg.dim()));
            let lhs = alg.exp(&a, s) * alg.exp(&a, t);
            let rhs = alg.exp(&a, s + t);
            let scale = rhs.amax().max(1.0);
            prop_assert!((lhs - &rhs).amax() / scale < 1e-10);
        }

        #[test]
        fn exponentials_stay_in_the_group(idx in 0usize..NAMES.len(), t in -5.0..5.0f64, seed in coords(6)) {
            let alg = algebra(NAMES[idx]).unwrap();
            let a = Coords::from_iterator(alg.dim(), seed.iter().take(alg.dim()).map(|v| v * 0.5));
            let g = alg.exp(&a, t);
            let scale = g.amax().max(1.0);
            prop_assert!(alg.constraint_defect(&g) / scale < 1e-11, "{} defect {}", NAMES[idx], alg.constraint_defect(&g));
        }
    }
}
