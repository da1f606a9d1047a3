use nalgebra::DMatrix;

use super::algebra::{Coords, LieAlgebra};
use crate::error::{Error, Result};

/// Max-norm of `dω + ½[ω, ω]` on coordinate bivectors at `point`, where
/// `ω = g⁻¹dg` is the pulled-back Maurer–Cartan form of `chart`.
///
/// `ω` is evaluated by central differences with step `h`, and `dω` by a
/// second central difference of those values, so the result is `O(h²)` for
/// a genuine group chart. The residual from projecting `g⁻¹∂g` onto the
/// algebra is folded into the result, so charts that leave the group show up.
pub fn maurer_cartan_defect<F>(alg: &LieAlgebra, chart: F, point: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> DMatrix<f64>,
{
    let d = point.len();
    let mut worst: f64 = 0.0;

    let omega = |p: &[f64], i: usize| -> Result<(Coords, f64)> {
        let g = chart(p);
        let inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix(format!("chart value at {p:?}")))?;
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let dg = (chart(&plus) - chart(&minus)) / (2.0 * h);
        Ok(alg.project_unchecked(&(inv * dg)))
    };

    let mut at_point = Vec::with_capacity(d);
    for i in 0..d {
        let (w, residual) = omega(point, i)?;
        worst = worst.max(residual);
        at_point.push(w);
    }

    for i in 0..d {
        for j in (i + 1)..d {
            let shifted = |k: usize, delta: f64| {
                let mut p = point.to_vec();
                p[k] += delta;
                p
            };
            // ∂_i ω_j − ∂_j ω_i
            let di_wj = (omega(&shifted(i, h), j)?.0 - omega(&shifted(i, -h), j)?.0) / (2.0 * h);
            let dj_wi = (omega(&shifted(j, h), i)?.0 - omega(&shifted(j, -h), i)?.0) / (2.0 * h);
            let bracket = alg.bracket(&at_point[i], &at_point[j])?;
            worst = worst.max((di_wj - dj_wi + bracket).amax());
        }
    }
    Ok(worst)
}

/// Parametrized group charts available by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedChart {
    /// `(x, y, z) ↦ [[1, x, z], [0, 1, y], [0, 0, 1]]` in `heis3`.
    Heisenberg,
    /// `(θ, x, y) ↦` rotation by θ followed by translation `(x, y)` in `se2`.
    Euclidean2,
    /// Exponential coordinates `p ↦ exp(Σ pᵢeᵢ)` of any algebra.
    Exponential,
}

impl NamedChart {
    /// The natural chart of a built-in algebra.
    pub fn for_algebra(name: &str) -> Self {
        match name {
            "heis3" => NamedChart::Heisenberg,
            "se2" => NamedChart::Euclidean2,
            _ => NamedChart::Exponential,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NamedChart::Heisenberg => "unipotent",
            NamedChart::Euclidean2 => "rotation_translation",
            NamedChart::Exponential => "exponential",
        }
    }

    pub fn eval(&self, alg: &LieAlgebra, p: &[f64]) -> DMatrix<f64> {
        match self {
            NamedChart::Heisenberg => DMatrix::from_row_slice(3, 3, &[1.0, p[0], p[2], 0.0, 1.0, p[1], 0.0, 0.0, 1.0]),
            NamedChart::Euclidean2 => {
                let (s, c) = p[0].sin_cos();
                DMatrix::from_row_slice(3, 3, &[c, -s, p[1], s, c, p[2], 0.0, 0.0, 1.0])
            }
            NamedChart::Exponential => alg.exp(&Coords::from_column_slice(p), 1.0),
        }
    }

    /// Maurer–Cartan defect of this chart in `alg` at `point`.
    pub fn defect(&self, alg: &LieAlgebra, point: &[f64], h: f64) -> Result<f64> {
        let needed = match self {
            NamedChart::Heisenberg => Some(("heis3", 3)),
            NamedChart::Euclidean2 => Some(("se2", 3)),
            NamedChart::Exponential => None,
        };
        if let Some((name, _)) = needed {
            if alg.name() != name {
                return Err(Error::BadParams(format!("the {} chart belongs to `{name}`, not `{}`", self.label(), alg.name())));
            }
        }
        if point.len() != alg.dim() {
            return Err(Error::BadParams(format!("chart point needs {} coordinates, got {}", alg.dim(), point.len())));
        }
        maurer_cartan_defect(alg, |q: &[f64]| self.eval(alg, q), point, h)
    }
}
