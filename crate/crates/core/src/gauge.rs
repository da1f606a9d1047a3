//! Cartan connections in a coordinate gauge: validation, curvature and mutation.

use std::io::Read;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie::{expm, registry, Coords, LieAlgebra, CLOSURE_TOL};
use crate::lie_equation::read_numeric_csv;
use crate::spline::CubicSpline;

/// Soldering matrices with larger condition numbers are treated as singular.
pub const MAX_CONDITION: f64 = 1e8;
/// Default relative step of the central-difference exterior derivative.
pub const DEFAULT_H_FD: f64 = 1e-5;

/// A Lie algebra split into a structure-group part 𝔥 and a soldering complement.
#[derive(Debug, Clone)]
pub struct InfinitesimalModel {
    algebra: Arc<LieAlgebra>,
    h: Vec<usize>,
    solder: Vec<usize>,
}

impl InfinitesimalModel {
    pub fn new(algebra: Arc<LieAlgebra>, h: Vec<usize>, solder: Vec<usize>) -> Result<Self> {
        let n = algebra.dim();
        let mut seen = vec![false; n];
        for &i in h.iter().chain(&solder) {
            if i >= n || seen[i] {
                return Err(Error::BadParams("h and solder indices must partition the basis".into()));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::BadParams("h and solder indices must partition the basis".into()));
        }
        for (p, &i) in h.iter().enumerate() {
            for &j in &h[p + 1..] {
                let c = algebra.bracket(&algebra.unit(i), &algebra.unit(j))?;
                let leak = solder.iter().fold(0.0_f64, |m, &s| m.max(c[s].abs()));
                if leak > CLOSURE_TOL {
                    return Err(Error::BasisClosure { residual: leak });
                }
            }
        }
        Ok(InfinitesimalModel { algebra, h, solder })
    }

    /// One of the surface models `e2`, `o3`, `o21`: rotation first, then two translations.
    pub fn surface(name: &str) -> Result<Self> {
        match name {
            "e2" | "o3" | "o21" => Self::new(Arc::new(registry::algebra(name)?), vec![0], vec![1, 2]),
            other => Err(Error::UnknownAlgebra(format!("`{other}` is not a surface model"))),
        }
    }

    /// Trivial structure group: every basis element is soldering.
    pub fn flat(algebra: Arc<LieAlgebra>) -> Self {
        let solder = (0..algebra.dim()).collect();
        InfinitesimalModel { algebra, h: Vec::new(), solder }
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn h_indices(&self) -> &[usize] {
        &self.h
    }

    pub fn solder_indices(&self) -> &[usize] {
        &self.solder
    }

    pub fn is_surface(&self) -> bool {
        self.h.len() == 1 && self.solder.len() == 2
    }
}

/// Coefficient functions `x ↦ (A₁(x), …, A_d(x))` of a gauge.
pub trait GaugeField: Send + Sync {
    fn chart_dim(&self) -> usize;

    fn coefficients(&self, x: &[f64]) -> Result<Vec<Coords>>;

    /// Analytic partials, indexed `[j][i]` for `∂A_i/∂x_j`, when available.
    fn partials(&self, _x: &[f64]) -> Option<Result<Vec<Vec<Coords>>>> {
        None
    }

    /// Distance to the chart boundary (infinite for unbounded charts).
    fn boundary_distance(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    /// Period of an angular coordinate.
    fn period(&self, _i: usize) -> Option<f64> {
        None
    }
}

type CoeffFn = dyn Fn(&[f64]) -> Result<Vec<Coords>> + Send + Sync;
type PartialFn = dyn Fn(&[f64]) -> Result<Vec<Vec<Coords>>> + Send + Sync;

/// Gauge field built from closures.
pub struct FnGauge {
    dim: usize,
    coeff: Box<CoeffFn>,
    partials: Option<Box<PartialFn>>,
}

impl FnGauge {
    pub fn new<F>(dim: usize, coeff: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<Coords>> + Send + Sync + 'static,
    {
        FnGauge { dim, coeff: Box::new(coeff), partials: None }
    }

    pub fn with_partials<P>(mut self, partials: P) -> Self
    where
        P: Fn(&[f64]) -> Result<Vec<Vec<Coords>>> + Send + Sync + 'static,
    {
        self.partials = Some(Box::new(partials));
        self
    }
}

impl GaugeField for FnGauge {
    fn chart_dim(&self) -> usize {
        self.dim
    }
    fn coefficients(&self, x: &[f64]) -> Result<Vec<Coords>> {
        (self.coeff)(x)
    }
    fn partials(&self, x: &[f64]) -> Option<Result<Vec<Vec<Coords>>>> {
        self.partials.as_ref().map(|p| p(x))
    }
}

/// Mutated coefficients `φ(A_i)`.
struct MutatedField {
    inner: Arc<dyn GaugeField>,
    phi: DMatrix<f64>,
}

impl GaugeField for MutatedField {
    fn chart_dim(&self) -> usize {
        self.inner.chart_dim()
    }
    fn coefficients(&self, x: &[f64]) -> Result<Vec<Coords>> {
        Ok(self.inner.coefficients(x)?.iter().map(|a| &self.phi * a).collect())
    }
    fn partials(&self, x: &[f64]) -> Option<Result<Vec<Vec<Coords>>>> {
        self.inner.partials(x).map(|r| {
            r.map(|rows| rows.iter().map(|row| row.iter().map(|a| &self.phi * a).collect()).collect())
        })
    }
    fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.inner.boundary_distance(x)
    }
    fn period(&self, i: usize) -> Option<f64> {
        self.inner.period(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolderReport {
    pub invertible: bool,
    pub condition: f64,
}

/// Curvature `k` on the soldering basis; `k[m]` is the antisymmetric d×d
/// block of the m-th algebra component.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureValue {
    pub k: Vec<DMatrix<f64>>,
    /// Rotation-component coefficient of `σ¹∧σ²` for surface models.
    pub scalar_k: Option<f64>,
}

impl CurvatureValue {
    pub fn get(&self, m: usize, a: usize, b: usize) -> f64 {
        self.k[m][(a, b)]
    }

    /// `k(e_a, e_b)` as algebra coordinates.
    pub fn pair(&self, a: usize, b: usize) -> Coords {
        Coords::from_iterator(self.k.len(), self.k.iter().map(|blk| blk[(a, b)]))
    }

    pub fn max_abs(&self) -> f64 {
        self.k.iter().flat_map(|b| b.iter()).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// A Cartan connection `η = A_i(x) dxⁱ` on the section `h ≡ 1` of a trivialized bundle.
#[derive(Clone)]
pub struct CartanGauge {
    model: InfinitesimalModel,
    field: Arc<dyn GaugeField>,
    /// `None`: analytic partials when the field supplies them.
    h_fd: Option<f64>,
}

impl std::fmt::Debug for CartanGauge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CartanGauge")
            .field("algebra", &self.model.algebra.name())
            .field("chart_dim", &self.field.chart_dim())
            .field("h_fd", &self.h_fd)
            .finish()
    }
}

impl CartanGauge {
    pub fn new(model: InfinitesimalModel, field: Arc<dyn GaugeField>) -> Result<Self> {
        if field.chart_dim() != model.solder.len() {
            return Err(Error::BadParams(format!(
                "chart dimension {} differs from the soldering dimension {}",
                field.chart_dim(),
                model.solder.len()
            )));
        }
        Ok(CartanGauge { model, field, h_fd: None })
    }

    /// Forces central differences with relative step `h_fd`.
    pub fn with_finite_differences(mut self, h_fd: f64) -> Self {
        self.h_fd = Some(h_fd);
        self
    }

    pub fn model(&self) -> &InfinitesimalModel {
        &self.model
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.model.algebra
    }

    pub fn chart_dim(&self) -> usize {
        self.field.chart_dim()
    }

    pub fn field(&self) -> &Arc<dyn GaugeField> {
        &self.field
    }

    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.field.boundary_distance(x)
    }

    pub fn period(&self, i: usize) -> Option<f64> {
        self.field.period(i)
    }

    pub fn coefficients(&self, x: &[f64]) -> Result<Vec<Coords>> {
        let a = self.field.coefficients(x)?;
        if a.len() != self.chart_dim() || a.iter().any(|c| c.len() != self.algebra().dim()) {
            return Err(Error::BadParams("gauge returned coefficients of the wrong shape".into()));
        }
        if a.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::Domain(format!("non-finite gauge coefficients at {x:?}")));
        }
        Ok(a)
    }

    /// `η(v) = Σ vᵢ A_i(x)`.
    pub fn eta(&self, x: &[f64], v: &[f64]) -> Result<Coords> {
        let a = self.coefficients(x)?;
        let mut out = self.algebra().zero();
        for (ai, vi) in a.iter().zip(v) {
            out += ai * *vi;
        }
        Ok(out)
    }

    fn soldering(&self, a: &[Coords]) -> DMatrix<f64> {
        let s = &self.model.solder;
        DMatrix::from_fn(s.len(), a.len(), |r, i| a[i][s[r]])
    }

    pub fn soldering_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.soldering(&self.coefficients(x)?))
    }

    pub fn validate(&self, x: &[f64]) -> Result<SolderReport> {
        let s = self.soldering_matrix(x)?;
        let sv = s.singular_values();
        let max = sv.max();
        let min = sv.min();
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        Ok(SolderReport { invertible: condition.is_finite() && condition < MAX_CONDITION, condition })
    }

    /// `∂A_i/∂x_j` indexed `[j][i]`.
    pub fn partials(&self, x: &[f64]) -> Result<Vec<Vec<Coords>>> {
        if self.h_fd.is_none() {
            if let Some(p) = self.field.partials(x) {
                return p;
            }
        }
        let base = self.h_fd.unwrap_or(DEFAULT_H_FD);
        let mut out = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let step = base.max(base * x[j].abs());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += step;
            xm[j] -= step;
            let (ap, am) = (self.coefficients(&xp)?, self.coefficients(&xm)?);
            out.push(ap.iter().zip(&am).map(|(p, m)| (p - m) / (2.0 * step)).collect());
        }
        Ok(out)
    }

    /// Coordinate components `F_ij = ∂_i A_j − ∂_j A_i + [A_i, A_j]` of `dη + ½[η,η]`.
    pub fn curvature_coordinates(&self, x: &[f64]) -> Result<Vec<Vec<Coords>>> {
        let a = self.coefficients(x)?;
        let da = self.partials(x)?;
        let d = a.len();
        let alg = self.algebra();
        let mut f = vec![vec![alg.zero(); d]; d];
        for i in 0..d {
            for j in (i + 1)..d {
                let v = &da[i][j] - &da[j][i] + alg.bracket(&a[i], &a[j])?;
                f[j][i] = -&v;
                f[i][j] = v;
            }
        }
        Ok(f)
    }

    pub fn curvature(&self, x: &[f64]) -> Result<CurvatureValue> {
        let report = self.validate(x)?;
        if !report.invertible {
            return Err(Error::SolderingSingular { condition: report.condition });
        }
        let sinv = self
            .soldering_matrix(x)?
            .try_inverse()
            .ok_or(Error::SolderingSingular { condition: report.condition })?;
        let f = self.curvature_coordinates(x)?;
        let d = self.chart_dim();
        let n = self.algebra().dim();
        let mut k: Vec<DMatrix<f64>> = vec![DMatrix::zeros(d, d); n];
        for a in 0..d {
            for b in (a + 1)..d {
                for i in 0..d {
                    for j in (i + 1)..d {
                        let w = sinv[(i, a)] * sinv[(j, b)] - sinv[(j, a)] * sinv[(i, b)];
                        if w != 0.0 {
                            for (m, blk) in k.iter_mut().enumerate() {
                                blk[(a, b)] += f[i][j][m] * w;
                            }
                        }
                    }
                }
                for blk in k.iter_mut() {
                    blk[(b, a)] = -blk[(a, b)];
                }
            }
        }
        let scalar_k = self.model.is_surface().then(|| k[self.model.h[0]][(0, 1)]);
        Ok(CurvatureValue { k, scalar_k })
    }

    /// Replaces the model by `target` through the linear map `phi` on algebra coordinates.
    pub fn mutate(&self, phi: &DMatrix<f64>, target: InfinitesimalModel) -> Result<CartanGauge> {
        let src = &self.model;
        let (g, gt) = (src.algebra.as_ref(), target.algebra.as_ref());
        if phi.ncols() != g.dim() || phi.nrows() != gt.dim() {
            return Err(Error::MutationInvalid(format!(
                "map must be {}×{}, got {}×{}",
                gt.dim(),
                g.dim(),
                phi.nrows(),
                phi.ncols()
            )));
        }
        if src.h.len() != target.h.len() || src.solder.len() != target.solder.len() {
            return Err(Error::MutationInvalid("models have different 𝔥 or soldering dimensions".into()));
        }
        let block = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |r, c| phi[(rows[r], cols[c])]);
        let invertible = |m: DMatrix<f64>| m.is_empty() || m.determinant().abs() > 1e-12;
        let leak = block(&target.solder, &src.h).amax().max(block(&target.h, &src.solder).amax());
        if src.h.is_empty() {
            // nothing to intertwine
        } else if leak > CLOSURE_TOL || !invertible(block(&target.h, &src.h)) {
            return Err(Error::MutationInvalid("map must send 𝔥 bijectively onto the target 𝔥".into()));
        }
        if !invertible(block(&target.solder, &src.solder)) {
            return Err(Error::MutationInvalid("map must send the soldering complement bijectively".into()));
        }
        // H-module condition: [φh, φx]' = φ[h, x] for h in 𝔥 and every basis x.
        for &i in &src.h {
            for j in 0..g.dim() {
                let (ei, ej) = (g.unit(i), g.unit(j));
                let lhs = gt.bracket(&(phi * &ei), &(phi * &ej))?;
                let rhs = phi * g.bracket(&ei, &ej)?;
                let residual = (lhs - rhs).amax();
                if residual > CLOSURE_TOL {
                    return Err(Error::MutationInvalid(format!("map does not intertwine 𝔥 brackets (residual {residual:.3e})")));
                }
            }
        }
        let field: Arc<dyn GaugeField> = Arc::new(MutatedField { inner: self.field.clone(), phi: phi.clone() });
        Ok(CartanGauge { model: target, field, h_fd: self.h_fd })
    }

    /// Velocity `(ẋ, ḣ)` of the bundle point `(x, h = exp(fiber·e_h))`
    /// at which the full connection `ω = ω_H + Ad_{h⁻¹}η` takes the value `a`.
    pub fn bundle_velocity(&self, x: &[f64], fiber: &[f64], a: &Coords) -> Result<(Vec<f64>, Vec<f64>)> {
        let model = &self.model;
        if model.h.len() > 1 {
            return Err(Error::BadParams("only trivial or one-dimensional structure groups are supported".into()));
        }
        if fiber.len() != model.h.len() {
            return Err(Error::BadParams("fiber coordinate count does not match the structure group".into()));
        }
        let alg = self.algebra();
        let coeff = self.coefficients(x)?;
        let ad = match model.h.first() {
            Some(&hi) => {
                let gen = &alg.basis()[hi];
                let hm = expm::exp_with_form(&(gen * fiber[0]), alg.exp_form());
                let hinv = expm::exp_with_form(&(gen * -fiber[0]), alg.exp_form());
                alg.project_unchecked(&(hm * alg.to_matrix(a) * hinv)).0
            }
            None => a.clone(),
        };
        let s = self.soldering(&coeff);
        let rhs = Coords::from_iterator(model.solder.len(), model.solder.iter().map(|&k| ad[k]));
        let sinv = s.clone().try_inverse().ok_or(Error::SolderingSingular { condition: f64::INFINITY })?;
        let condition = s.norm() * sinv.norm();
        if !(condition < MAX_CONDITION) {
            return Err(Error::SolderingSingular { condition });
        }
        let xdot = sinv * rhs;
        let fdot = model
            .h
            .iter()
            .map(|&k| ad[k] - coeff.iter().zip(xdot.iter()).map(|(ai, v)| ai[k] * v).sum::<f64>())
            .collect();
        Ok((xdot.iter().copied().collect(), fdot))
    }
}

/// Gauge coefficients tabulated on a rectangular grid, interpolated by
/// tensor-product natural cubic splines.
///
/// File layout: a header row `x0_min,x0_max,x1_min,x1_max,n0,n1`, then
/// `n0·n1` rows (x0 index outer) each holding `A₁` then `A₂` coordinates.
#[derive(Debug, Clone)]
pub struct TabulatedGauge {
    x0: Vec<f64>,
    x1: Vec<f64>,
    /// `rows[c][i]` interpolates component `c` along x1 at grid line `x0[i]`.
    rows: Vec<Vec<CubicSpline>>,
    n: usize,
}

impl TabulatedGauge {
    pub fn read<R: Read>(reader: R, algebra_dim: usize) -> Result<Self> {
        let rows = read_numeric_csv(reader)?;
        let header = rows.first().ok_or_else(|| Error::Parse("empty gauge table".into()))?;
        if header.len() != 6 {
            return Err(Error::Parse("gauge table header must be x0_min,x0_max,x1_min,x1_max,n0,n1".into()));
        }
        let (n0, n1) = (header[4] as usize, header[5] as usize);
        if n0 < 2 || n1 < 2 || header[4].fract() != 0.0 || header[5].fract() != 0.0 {
            return Err(Error::Parse("gauge table needs integer grid sizes of at least 2".into()));
        }
        if header[1] <= header[0] || header[3] <= header[2] {
            return Err(Error::Parse("gauge table bounds must be increasing".into()));
        }
        let data = &rows[1..];
        if data.len() != n0 * n1 || data.iter().any(|r| r.len() != 2 * algebra_dim) {
            return Err(Error::Parse(format!(
                "gauge table needs {} rows of {} values",
                n0 * n1,
                2 * algebra_dim
            )));
        }
        let grid = |lo: f64, hi: f64, n: usize| (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect::<Vec<_>>();
        let x0 = grid(header[0], header[1], n0);
        let x1 = grid(header[2], header[3], n1);
        let mut splines = Vec::with_capacity(2 * algebra_dim);
        for c in 0..2 * algebra_dim {
            let mut per_line = Vec::with_capacity(n0);
            for i in 0..n0 {
                let ys = (0..n1).map(|j| data[i * n1 + j][c]).collect();
                per_line.push(CubicSpline::new(x1.clone(), ys)?);
            }
            splines.push(per_line);
        }
        Ok(TabulatedGauge { x0, x1, rows: splines, n: algebra_dim })
    }
}

impl GaugeField for TabulatedGauge {
    fn chart_dim(&self) -> usize {
        2
    }

    fn coefficients(&self, x: &[f64]) -> Result<Vec<Coords>> {
        let (lo0, hi0) = (self.x0[0], self.x0[self.x0.len() - 1]);
        let (lo1, hi1) = (self.x1[0], self.x1[self.x1.len() - 1]);
        if x[0] < lo0 || x[0] > hi0 || x[1] < lo1 || x[1] > hi1 {
            return Err(Error::Domain(format!("{x:?} is outside the tabulated chart")));
        }
        let mut vals = Vec::with_capacity(2 * self.n);
        for lines in &self.rows {
            let ys = lines.iter().map(|s| s.eval(x[1])).collect();
            vals.push(CubicSpline::new(self.x0.clone(), ys)?.eval(x[0]));
        }
        Ok(vec![
            Coords::from_column_slice(&vals[..self.n]),
            Coords::from_column_slice(&vals[self.n..]),
        ])
    }

    fn boundary_distance(&self, x: &[f64]) -> f64 {
        let d0 = (x[0] - self.x0[0]).min(self.x0[self.x0.len() - 1] - x[0]);
        let d1 = (x[1] - self.x1[0]).min(self.x1[self.x1.len() - 1] - x[1]);
        d0.min(d1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclidean() -> CartanGauge {
        let model = InfinitesimalModel::surface("e2").unwrap();
        let field = FnGauge::new(2, |_| Ok(vec![Coords::from_vec(vec![0.0, 1.0, 0.0]), Coords::from_vec(vec![0.0, 0.0, 1.0])]));
        CartanGauge::new(model, Arc::new(field)).unwrap()
    }

    /// Maurer–Cartan form of the Heisenberg chart: dx, dy, dz − x dy.
    fn heisenberg() -> CartanGauge {
        let model = InfinitesimalModel::flat(Arc::new(registry::algebra("heis3").unwrap()));
        let field = FnGauge::new(3, |x| {
            Ok(vec![
                Coords::from_vec(vec![1.0, 0.0, 0.0]),
                Coords::from_vec(vec![0.0, 1.0, -x[0]]),
                Coords::from_vec(vec![0.0, 0.0, 1.0]),
            ])
        })
        .with_partials(|_| {
            let z = Coords::zeros(3);
            Ok(vec![
                vec![z.clone(), Coords::from_vec(vec![0.0, 0.0, -1.0]), z.clone()],
                vec![z.clone(), z.clone(), z.clone()],
                vec![z.clone(), z.clone(), z],
            ])
        });
        CartanGauge::new(model, Arc::new(field)).unwrap()
    }

    #[test]
    fn model_checks() {
        assert!(InfinitesimalModel::surface("e2").unwrap().is_surface());
        let se2 = Arc::new(registry::algebra("se2").unwrap());
        assert!(InfinitesimalModel::new(se2.clone(), vec![0], vec![1]).is_err());
        // Translations span an abelian subalgebra; rotation plus a translation does not.
        assert!(InfinitesimalModel::new(se2.clone(), vec![1, 2], vec![0]).is_ok());
        assert!(InfinitesimalModel::new(se2, vec![0, 1], vec![2]).is_err());
    }

    #[test]
    fn validate_examples() {
        let r = euclidean().validate(&[0.3, 0.4]).unwrap();
        assert!(r.invertible && (r.condition - 1.0).abs() < 1e-12);
        let model = InfinitesimalModel::surface("e2").unwrap();
        let degenerate = FnGauge::new(2, |_| Ok(vec![Coords::from_vec(vec![0.0, 1.0, 0.0]); 2]));
        let g = CartanGauge::new(model, Arc::new(degenerate)).unwrap();
        assert!(!g.validate(&[0.0, 0.0]).unwrap().invertible);
        assert!(matches!(g.curvature(&[0.0, 0.0]), Err(Error::SolderingSingular { .. })));
    }

    #[test]
    fn flat_gauges_have_no_curvature() {
        let k = euclidean().curvature(&[1.0, -2.0]).unwrap();
        assert!(k.max_abs() < 1e-12 && k.scalar_k == Some(0.0));
        let h = heisenberg();
        for gauge in [h.clone(), h.with_finite_differences(1e-5)] {
            let k = gauge.curvature(&[0.3, -0.2, 1.1]).unwrap();
            assert!(k.max_abs() < 1e-6, "{}", k.max_abs());
            assert!(k.scalar_k.is_none());
        }
    }

    #[test]
    fn curvature_is_antisymmetric_exactly() {
        let model = InfinitesimalModel::surface("e2").unwrap();
        let field = FnGauge::new(2, |x| {
            Ok(vec![
                Coords::from_vec(vec![x[1].sin(), 1.0 + x[0] * x[0], 0.2]),
                Coords::from_vec(vec![x[0] * x[1], 0.1, 2.0 + x[1].cos()]),
            ])
        });
        let k = CartanGauge::new(model, Arc::new(field)).unwrap().curvature(&[0.4, 0.9]).unwrap();
        for blk in &k.k {
            assert_eq!(blk[(0, 1)], -blk[(1, 0)]);
            assert_eq!(blk[(0, 0)], 0.0);
        }
    }

    #[test]
    fn identity_mutation_is_a_no_op_and_bad_maps_fail() {
        let g = euclidean();
        let id = DMatrix::identity(3, 3);
        let m = g.mutate(&id, InfinitesimalModel::surface("e2").unwrap()).unwrap();
        assert_eq!(m.coefficients(&[0.5, 0.5]).unwrap(), g.coefficients(&[0.5, 0.5]).unwrap());
        let mut swap = DMatrix::zeros(3, 3);
        swap[(1, 0)] = 1.0;
        swap[(0, 1)] = 1.0;
        swap[(2, 2)] = 1.0;
        assert!(matches!(g.mutate(&swap, InfinitesimalModel::surface("e2").unwrap()), Err(Error::MutationInvalid(_))));
        let scaled = DMatrix::from_diagonal(&Coords::from_vec(vec![2.0, 1.0, 1.0]));
        assert!(matches!(g.mutate(&scaled, InfinitesimalModel::surface("e2").unwrap()), Err(Error::MutationInvalid(_))));
    }

    #[test]
    fn euclidean_mutated_into_o3_has_constant_curvature() {
        let m = euclidean().mutate(&DMatrix::identity(3, 3), InfinitesimalModel::surface("o3").unwrap()).unwrap();
        let k0 = m.curvature(&[0.0, 0.0]).unwrap().scalar_k.unwrap();
        assert!((k0 + 1.0).abs() < 1e-12);
        for x in [[1.0, 2.0], [-3.0, 0.5]] {
            assert!((m.curvature(&x).unwrap().scalar_k.unwrap() - k0).abs() < 1e-12);
        }
    }

    #[test]
    fn bundle_velocity_rotates_the_request() {
        let g = euclidean();
        let a = Coords::from_vec(vec![0.5, 1.0, 0.0]);
        let (xd, fd) = g.bundle_velocity(&[0.0, 0.0], &[0.3], &a).unwrap();
        assert!((xd[0] - 0.3f64.cos()).abs() < 1e-14 && (xd[1] + 0.3f64.sin()).abs() < 1e-14);
        assert!((fd[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tabulated_gauge_reproduces_smooth_data() {
        let mut text = String::from("0,1,0,2,21,31\n");
        for i in 0..21 {
            for j in 0..31 {
                let (x, y) = (i as f64 / 20.0, 2.0 * j as f64 / 30.0);
                text.push_str(&format!("{},1,0,0,0,{}\n", x * y, 1.0 + 0.1 * x));
            }
        }
        let t = TabulatedGauge::read(text.as_bytes(), 3).unwrap();
        let a = t.coefficients(&[0.37, 1.21]).unwrap();
        assert!((a[0][0] - 0.37 * 1.21).abs() < 1e-6);
        assert!((a[1][2] - 1.037).abs() < 1e-9);
        assert!(t.coefficients(&[1.5, 0.0]).is_err());
        assert!(TabulatedGauge::read("0,1,0,1,2,2\n1,2,3\n".as_bytes(), 3).is_err());
    }
}
