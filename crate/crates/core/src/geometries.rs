//! Built-in surface coframings, Lorentz families and the Levi-Civita gauge.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::gauge::{CartanGauge, GaugeField, InfinitesimalModel, TabulatedGauge};
use crate::lie::{registry, Coords};
use crate::spline::CubicSpline;

const TWO_PI: f64 = 2.0 * PI;

pub const SURFACE_NAMES: &[&str] = &[
    "euclidean",
    "hyperbolic_half_plane",
    "sphere_polar",
    "revolution",
    "disk_extendability",
    "cone",
    "tan_plane",
    "clifton_can",
];
pub const LORENTZ_NAMES: &[&str] = &["clifton_pohl", "lorentz_f"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    Riemannian,
    Lorentz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureGroup {
    So2,
    Trivial,
}

/// The warping function λ(z) of a surface of revolution.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Coefficients `c₀, c₁, …` of `Σ cₖ zᵏ`.
    Polynomial(Vec<f64>),
    /// Natural cubic interpolation of `(z, λ)` samples.
    Tabulated(CubicSpline),
}

impl Profile {
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Profile::Polynomial(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Profile::Tabulated(s) => s.domain(),
        }
    }

    /// `(λ, λ', λ'')` at `z`; tabulated profiles refuse to extrapolate.
    pub fn eval(&self, z: f64) -> Result<(f64, f64, f64)> {
        match self {
            Profile::Polynomial(c) => {
                if !z.is_finite() {
                    return Err(Error::Domain(format!("z = {z}")));
                }
                Ok(poly_eval(c, z))
            }
            Profile::Tabulated(s) => {
                let (lo, hi) = s.domain();
                if !(z >= lo && z <= hi) {
                    return Err(Error::Domain(format!("z = {z} is outside the tabulated profile [{lo}, {hi}]")));
                }
                Ok(s.eval_all(z))
            }
        }
    }

    /// Reads two-column `(z, λ)` CSV samples.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let rows = crate::lie_equation::read_numeric_csv(file)?;
        if rows.iter().any(|r| r.len() != 2) {
            return Err(Error::Parse(format!("{}: profile rows must be `z, lambda`", path.display())));
        }
        let (z, l) = rows.iter().map(|r| (r[0], r[1])).unzip();
        Ok(Profile::Tabulated(CubicSpline::new(z, l)?))
    }
}

/// Value and first two derivatives of a polynomial (Horner).
pub fn poly_eval(c: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut d, mut dd) = (0.0, 0.0, 0.0);
    for &ck in c.iter().rev() {
        dd = dd * x + 2.0 * d;
        d = d * x + p;
        p = p * x + ck;
    }
    (p, d, dd)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    Euclidean,
    HyperbolicHalfPlane,
    SpherePolar,
    Revolution(Profile),
    DiskExtendability,
    Cone { beta: f64 },
    TanPlane,
    /// Frame rotated by `φ(z) = scale/z` on the half cylinder.
    CliftonCan { scale: f64 },
}

/// An oriented surface given by a coframe `σⁱ = eⁱ_j dx^j` on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMetric {
    kind: SurfaceKind,
}

impl SurfaceMetric {
    pub fn new(kind: SurfaceKind) -> Result<Self> {
        match &kind {
            SurfaceKind::Cone { beta } if !(*beta > 0.0 && beta.is_finite()) => {
                return Err(Error::BadParams(format!("cone needs beta > 0, got {beta}")))
            }
            SurfaceKind::CliftonCan { scale } if !(scale.is_finite() && *scale != 0.0) => {
                return Err(Error::BadParams(format!("clifton_can needs a nonzero finite scale, got {scale}")))
            }
            SurfaceKind::Revolution(Profile::Polynomial(c)) if c.iter().any(|v| !v.is_finite()) => {
                return Err(Error::BadParams("lambda coefficients must be finite".into()))
            }
            _ => {}
        }
        Ok(SurfaceMetric { kind })
    }

    pub fn euclidean() -> Self {
        SurfaceMetric { kind: SurfaceKind::Euclidean }
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SurfaceKind::Euclidean => "euclidean",
            SurfaceKind::HyperbolicHalfPlane => "hyperbolic_half_plane",
            SurfaceKind::SpherePolar => "sphere_polar",
            SurfaceKind::Revolution(_) => "revolution",
            SurfaceKind::DiskExtendability => "disk_extendability",
            SurfaceKind::Cone { .. } => "cone",
            SurfaceKind::TanPlane => "tan_plane",
            SurfaceKind::CliftonCan { .. } => "clifton_can",
        }
    }

    pub fn signature(&self) -> Signature {
        Signature::Riemannian
    }

    pub fn structure_group(&self) -> StructureGroup {
        match self.kind {
            SurfaceKind::TanPlane | SurfaceKind::CliftonCan { .. } => StructureGroup::Trivial,
            _ => StructureGroup::So2,
        }
    }

    /// Chart rectangle `[lo, hi]` (bounds may be infinite).
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let inf = f64::INFINITY;
        match &self.kind {
            SurfaceKind::Euclidean | SurfaceKind::TanPlane => ([-inf, -inf], [inf, inf]),
            SurfaceKind::HyperbolicHalfPlane => ([-inf, 0.0], [inf, inf]),
            SurfaceKind::SpherePolar => ([0.0, -inf], [PI, inf]),
            SurfaceKind::Revolution(p) => {
                let (lo, hi) = p.domain();
                ([lo, -inf], [hi, inf])
            }
            SurfaceKind::DiskExtendability => ([-1.0, -1.0], [1.0, 1.0]),
            SurfaceKind::Cone { .. } => ([0.0, -inf], [inf, inf]),
            SurfaceKind::CliftonCan { .. } => ([0.0, -inf], [inf, inf]),
        }
    }

    /// Period of an angular chart coordinate.
    pub fn period(&self, i: usize) -> Option<f64> {
        match (&self.kind, i) {
            (SurfaceKind::SpherePolar, 1)
            | (SurfaceKind::Revolution(_), 1)
            | (SurfaceKind::Cone { .. }, 1)
            | (SurfaceKind::CliftonCan { .. }, 1) => Some(TWO_PI),
            _ => None,
        }
    }

    /// Distance from `x` to the chart boundary (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SurfaceKind::DiskExtendability => 1.0 - x[0].hypot(x[1]),
            _ => {
                let (lo, hi) = self.bounds();
                (0..2).fold(f64::INFINITY, |m, i| m.min(x[i] - lo[i]).min(hi[i] - x[i]))
            }
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != 2 || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("bad chart point {x:?}")));
        }
        let inside = match &self.kind {
            // The rim is admitted so that degeneration there can be observed.
            SurfaceKind::DiskExtendability => x[0].hypot(x[1]) <= 1.0,
            SurfaceKind::Revolution(_) => {
                let (lo, hi) = self.bounds();
                x[0] >= lo[0] && x[0] <= hi[0]
            }
            _ => self.boundary_distance(x) > 0.0,
        };
        if inside {
            Ok(())
        } else {
            Err(Error::Domain(format!("{x:?} is outside the {} chart", self.name())))
        }
    }

    /// Coframe matrix `e` (rows σ¹, σ²) and its partials `∂e/∂x₀`, `∂e/∂x₁`.
    pub fn coframe_partials(&self, x: &[f64]) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])> {
        self.check(x)?;
        let z = Matrix2::zeros();
        let d = |a: f64, b: f64| Matrix2::new(a, 0.0, 0.0, b);
        Ok(match &self.kind {
            SurfaceKind::Euclidean => (Matrix2::identity(), [z, z]),
            SurfaceKind::HyperbolicHalfPlane => {
                let y = x[1];
                (Matrix2::identity() / y, [z, -Matrix2::identity() / (y * y)])
            }
            SurfaceKind::SpherePolar => (d(1.0, x[0].sin()), [d(0.0, x[0].cos()), z]),
            SurfaceKind::Revolution(p) => {
                let (l, dl, _) = p.eval(x[0])?;
                let el = l.exp();
                (d(1.0, el), [d(0.0, dl * el), z])
            }
            SurfaceKind::DiskExtendability => {
                let s = (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).sqrt();
                if s == 0.0 {
                    (z, [z, z])
                } else {
                    let i = Matrix2::identity();
                    (i * s, [i * (-x[0] / s), i * (-x[1] / s)])
                }
            }
            SurfaceKind::Cone { beta } => (d(1.0, beta * x[0]), [d(0.0, *beta), z]),
            SurfaceKind::TanPlane => {
                let (a, b) = (1.0 + x[1] * x[1], 1.0 + x[0] * x[0]);
                (d(1.0 / a, 1.0 / b), [d(0.0, -2.0 * x[0] / (b * b)), d(-2.0 * x[1] / (a * a), 0.0)])
            }
            SurfaceKind::CliftonCan { scale } => {
                let phi = scale / x[0];
                let dphi = -scale / (x[0] * x[0]);
                let (s, c) = phi.sin_cos();
                let e = Matrix2::new(c, s, -s, c);
                let de = Matrix2::new(-s, c, -c, -s) * dphi;
                (e, [de, z])
            }
        })
    }

    pub fn coframe(&self, x: &[f64]) -> Result<Matrix2<f64>> {
        Ok(self.coframe_partials(x)?.0)
    }

    /// Connection coefficients `(γ₀, γ₁)` of the torsion-free connection:
    /// `dσ¹ = −γ∧σ²`, `dσ² = γ∧σ¹`.
    pub fn levi_civita_form(&self, x: &[f64]) -> Result<[f64; 2]> {
        let (e, de) = self.coframe_partials(x)?;
        let det = e.determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::SolderingSingular { condition: f64::INFINITY });
        }
        // dσᵃ = Tᵃ dx⁰∧dx¹ and σ¹∧σ² = det·dx⁰∧dx¹.
        let t1 = de[0][(0, 1)] - de[1][(0, 0)];
        let t2 = de[0][(1, 1)] - de[1][(1, 0)];
        let (p, q) = (-t1 / det, -t2 / det);
        Ok([p * e[(0, 0)] + q * e[(1, 0)], p * e[(0, 1)] + q * e[(1, 1)]])
    }
}

struct LeviCivitaField(SurfaceMetric);

impl GaugeField for LeviCivitaField {
    fn chart_dim(&self) -> usize {
        2
    }
    fn coefficients(&self, x: &[f64]) -> Result<Vec<Coords>> {
        let e = self.0.coframe(x)?;
        // The connection form is undefined where the coframe degenerates; the
        // soldering part still reports the degeneration to validate().
        let g = if e.determinant().abs() > 1e-12 { self.0.levi_civita_form(x)? } else { [0.0, 0.0] };
        Ok((0..2).map(|i| Coords::from_vec(vec![g[i], e[(0, i)], e[(1, i)]])).collect())
    }
    fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.0.boundary_distance(x)
    }
    fn period(&self, i: usize) -> Option<f64> {
        self.0.period(i)
    }
}

struct CoframeField(SurfaceMetric);

impl GaugeField for CoframeField {
    fn chart_dim(&self) -> usize {
        2
    }
    fn coefficients(&self, x: &[f64]) -> Result<Vec<Coords>> {
        let e = self.0.coframe(x)?;
        Ok((0..2).map(|i| Coords::from_vec(vec![e[(0, i)], e[(1, i)]])).collect())
    }
    fn partials(&self, x: &[f64]) -> Option<Result<Vec<Vec<Coords>>>> {
        Some(self.0.coframe_partials(x).map(|(_, de)| {
            de.iter()
                .map(|m| (0..2).map(|i| Coords::from_vec(vec![m[(0, i)], m[(1, i)]])).collect())
                .collect()
        }))
    }
    fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.0.boundary_distance(x)
    }
    fn period(&self, i: usize) -> Option<f64> {
        self.0.period(i)
    }
}

/// The Levi-Civita connection as a gauge in the `e2` model (rotation, e₁, e₂).
pub fn levi_civita_gauge(metric: &SurfaceMetric) -> Result<CartanGauge> {
    if metric.signature() != Signature::Riemannian {
        return Err(Error::BadParams("Levi-Civita gauges need a Riemannian metric".into()));
    }
    CartanGauge::new(InfinitesimalModel::surface("e2")?, Arc::new(LeviCivitaField(metric.clone())))
}

/// The coframe itself as a gauge for the translation model ℝ² (trivial structure group).
pub fn coframe_gauge(metric: &SurfaceMetric) -> Result<CartanGauge> {
    let model = InfinitesimalModel::flat(Arc::new(registry::algebra("abelian2")?));
    CartanGauge::new(model, Arc::new(CoframeField(metric.clone())))
}

/// The natural gauge of a surface: Levi-Civita for SO(2) structure, the coframe otherwise.
pub fn surface_gauge(metric: &SurfaceMetric) -> Result<CartanGauge> {
    match metric.structure_group() {
        StructureGroup::So2 => levi_civita_gauge(metric),
        StructureGroup::Trivial => coframe_gauge(metric),
    }
}

/// Gauss curvature `K` from `dγ = K σ¹∧σ²`, differentiating γ with a
/// five-point stencil.
pub fn gauss_curvature(metric: &SurfaceMetric, x: &[f64]) -> Result<f64> {
    let det = metric.coframe(x)?.determinant();
    if det.abs() <= 1e-12 {
        return Err(Error::SolderingSingular { condition: f64::INFINITY });
    }
    let mut d = [[0.0; 2]; 2];
    for j in 0..2 {
        let h = 1e-3 * x[j].abs().max(1.0);
        let at = |s: f64| {
            let mut y = x.to_vec();
            y[j] += s;
            metric.levi_civita_form(&y)
        };
        let (p2, p1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
        for i in 0..2 {
            d[j][i] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
        }
    }
    Ok((d[0][1] - d[1][0]) / det)
}

/// Two-dimensional Lorentz metrics treated through their geodesic equations.
#[derive(Debug, Clone, PartialEq)]
pub enum LorentzFamily {
    /// `dx dy / (x² + y²)` on the punctured plane.
    CliftonPohl,
    /// `dx dy + ½ f(x) dy²` with polynomial `f`.
    F { coeffs: Vec<f64> },
}

impl LorentzFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LorentzFamily::CliftonPohl => "clifton_pohl",
            LorentzFamily::F { .. } => "lorentz_f",
        }
    }

    /// `(f, f')` for the f-family.
    pub fn f(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            LorentzFamily::F { coeffs } => {
                let (v, d, _) = poly_eval(coeffs, x);
                Some((v, d))
            }
            LorentzFamily::CliftonPohl => None,
        }
    }

    pub fn boundary_distance(&self, p: &[f64]) -> f64 {
        match self {
            LorentzFamily::CliftonPohl => p[0].hypot(p[1]),
            LorentzFamily::F { .. } => f64::INFINITY,
        }
    }
}

/// Parsed `name = …` / `param.key = value` geometry description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeometrySpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

/// Anything a geometry spec can resolve to.
#[derive(Clone, Debug)]
pub enum Geometry {
    Surface(SurfaceMetric),
    Lorentz(LorentzFamily),
    Gauge(CartanGauge),
}

impl GeometrySpec {
    pub fn new(name: &str) -> Self {
        GeometrySpec { name: name.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Parses the text format; relative file parameters resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut spec = GeometrySpec::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "name" {
                spec.name = value.to_string();
            } else if let Some(p) = key.strip_prefix("param.") {
                let mut v = value.to_string();
                if let Some(base) = base {
                    if FILE_PARAMS.contains(&p) && value.parse::<f64>().is_err() && !value.contains(',') {
                        let path = PathBuf::from(value);
                        if path.is_relative() {
                            v = base.join(path).to_string_lossy().into_owned();
                        }
                    }
                }
                spec.params.insert(p.to_string(), v);
            } else {
                return Err(Error::Parse(format!("line {}: unknown key `{key}`", n + 1)));
            }
        }
        if spec.name.is_empty() {
            return Err(Error::Parse("geometry spec has no `name`".into()));
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("name = {}\n", self.name);
        for (k, v) in &self.params {
            s.push_str(&format!("param.{k} = {v}\n"));
        }
        s
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(Error::BadParams(format!("`{}` takes no parameter `{k}`", self.name))),
            None => Ok(()),
        }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::BadParams(format!("parameter `{key}` must be a number, got `{v}`"))),
        }
    }

    pub fn build(&self) -> Result<Geometry> {
        let surface = |kind| SurfaceMetric::new(kind).map(Geometry::Surface);
        match self.name.as_str() {
            "euclidean" | "hyperbolic_half_plane" | "sphere_polar" | "disk_extendability" | "tan_plane" => {
                self.allow(&[])?;
                surface(match self.name.as_str() {
                    "euclidean" => SurfaceKind::Euclidean,
                    "hyperbolic_half_plane" => SurfaceKind::HyperbolicHalfPlane,
                    "sphere_polar" => SurfaceKind::SpherePolar,
                    "disk_extendability" => SurfaceKind::DiskExtendability,
                    _ => SurfaceKind::TanPlane,
                })
            }
            "revolution" => {
                self.allow(&["lambda"])?;
                let profile = match self.params.get("lambda") {
                    None => Profile::Polynomial(vec![0.0]),
                    Some(v) => match parse_list(v) {
                        Some(c) => Profile::Polynomial(c),
                        None => Profile::read_csv(Path::new(v))?,
                    },
                };
                surface(SurfaceKind::Revolution(profile))
            }
            "cone" => {
                self.allow(&["beta"])?;
                surface(SurfaceKind::Cone { beta: self.number("beta", 0.75)? })
            }
            "clifton_can" => {
                self.allow(&["scale"])?;
                surface(SurfaceKind::CliftonCan { scale: self.number("scale", 1.0)? })
            }
            "clifton_pohl" => {
                self.allow(&[])?;
                Ok(Geometry::Lorentz(LorentzFamily::CliftonPohl))
            }
            "lorentz_f" => {
                self.allow(&["f"])?;
                let coeffs = match self.params.get("f") {
                    None => vec![1.0, 0.0, -1.0],
                    Some(v) => parse_list(v)
                        .ok_or_else(|| Error::BadParams(format!("`f` must be a coefficient list, got `{v}`")))?,
                };
                Ok(Geometry::Lorentz(LorentzFamily::F { coeffs }))
            }
            "gauge_table" => {
                self.allow(&["file", "model"])?;
                let model_name = self.params.get("model").map(String::as_str).unwrap_or("e2");
                let model = match model_name {
                    "e2" | "o3" | "o21" => InfinitesimalModel::surface(model_name)?,
                    other => InfinitesimalModel::flat(Arc::new(registry::algebra(other)?)),
                };
                let path = self
                    .params
                    .get("file")
                    .ok_or_else(|| Error::BadParams("gauge_table needs param.file".into()))?;
                let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
                let table = TabulatedGauge::read(file, model.algebra().dim())?;
                Ok(Geometry::Gauge(CartanGauge::new(model, Arc::new(table))?))
            }
            other => Err(Error::UnknownGeometry(other.to_string())),
        }
    }
}

/// Parameters that may name a file.
const FILE_PARAMS: &[&str] = &["lambda", "file"];

/// Parses `a,b,c` into numbers; `None` if any entry is not numeric.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().ok()).collect()
}

/// Resolves a builtin by name with parameters.
pub fn builtin(name: &str, params: &[(&str, &str)]) -> Result<Geometry> {
    let mut spec = GeometrySpec::new(name);
    for (k, v) in params {
        spec = spec.with(k, v);
    }
    spec.build()
}

/// Shortcut for builtins that are surfaces.
pub fn surface(name: &str, params: &[(&str, &str)]) -> Result<SurfaceMetric> {
    match builtin(name, params)? {
        Geometry::Surface(s) => Ok(s),
        _ => Err(Error::BadParams(format!("`{name}` is not a surface"))),
    }
}
