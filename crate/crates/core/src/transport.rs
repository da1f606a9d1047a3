//! Development, holonomy, anti-development, rolling and small-loop probes.

use std::path::Path;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::flows::rk4_step;
use crate::gauge::CartanGauge;
use crate::geometries::{levi_civita_gauge, parse_list, SurfaceMetric};
use crate::lie::{expm, Coords};
use crate::lie_equation::{read_numeric_csv, solve, DarbouxSignal, GroupTrajectory, Method};
use crate::spline::CubicSpline;

/// Endpoints closer than this (modulo periods) make a loop.
pub const CLOSURE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveShape {
    /// `a + t(b − a)`, `t ∈ [0, 1]`.
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// Counter-clockwise, `t ∈ [0, 2π]`.
    Circle { center: [f64; 2], radius: f64 },
    /// `(value, t)`, `t ∈ [0, 2π]`: a latitude or a cone's radius-`value` loop.
    Latitude { value: f64 },
    /// Vertex `k` at `t = k`.
    Polygon { vertices: Vec<Vec<f64>> },
    /// Natural cubic interpolation of samples.
    Sampled { splines: Vec<CubicSpline> },
}

impl CurveShape {
    fn dim(&self) -> usize {
        match self {
            CurveShape::Segment { a, .. } => a.len(),
            CurveShape::Circle { .. } | CurveShape::Latitude { .. } => 2,
            CurveShape::Polygon { vertices } => vertices[0].len(),
            CurveShape::Sampled { splines } => splines.len(),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            CurveShape::Segment { .. } => (0.0, 1.0),
            CurveShape::Circle { .. } | CurveShape::Latitude { .. } => (0.0, std::f64::consts::TAU),
            CurveShape::Polygon { vertices } => (0.0, (vertices.len() - 1) as f64),
            CurveShape::Sampled { splines } => splines[0].domain(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            CurveShape::Polygon { vertices } => (1..vertices.len() - 1).map(|k| k as f64).collect(),
            _ => Vec::new(),
        }
    }

    /// Position and velocity; `side` picks the polygon edge at a vertex.
    fn eval(&self, t: f64, side: Option<f64>) -> (Vec<f64>, Vec<f64>) {
        match self {
            CurveShape::Segment { a, b } => (
                a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect(),
                a.iter().zip(b).map(|(a, b)| b - a).collect(),
            ),
            CurveShape::Circle { center, radius } => {
                let (s, c) = t.sin_cos();
                (vec![center[0] + radius * c, center[1] + radius * s], vec![-radius * s, radius * c])
            }
            CurveShape::Latitude { value } => (vec![*value, t], vec![0.0, 1.0]),
            CurveShape::Polygon { vertices } => {
                let edges = vertices.len() - 1;
                let probe = side.unwrap_or(t);
                let k = (probe.floor().max(0.0) as usize).min(edges - 1);
                let w = t - k as f64;
                let (p, q) = (&vertices[k], &vertices[k + 1]);
                (
                    p.iter().zip(q).map(|(p, q)| p + w * (q - p)).collect(),
                    p.iter().zip(q).map(|(p, q)| q - p).collect(),
                )
            }
            CurveShape::Sampled { splines } => {
                let vals: Vec<(f64, f64, f64)> = splines.iter().map(|s| s.eval_all(t)).collect();
                (vals.iter().map(|v| v.0).collect(), vals.iter().map(|v| v.1).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Piece {
    shape: Arc<CurveShape>,
    lo: f64,
    hi: f64,
    reversed: bool,
}

impl Piece {
    fn duration(&self) -> f64 {
        self.hi - self.lo
    }

    /// Local parameter at elapsed time `u` into the piece.
    fn local(&self, u: f64) -> f64 {
        if self.reversed {
            self.hi - u
        } else {
            self.lo + u
        }
    }

    fn eval(&self, u: f64, side_u: Option<f64>) -> (Vec<f64>, Vec<f64>) {
        let (p, mut v) = self.shape.eval(self.local(u), side_u.map(|s| self.local(s)));
        if self.reversed {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        (p, v)
    }
}

/// A parametrized curve in a chart, possibly a concatenation of pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCurve {
    pieces: Vec<Piece>,
    t0: f64,
    periods: Vec<Option<f64>>,
}

impl ChartCurve {
    pub fn from_shape(shape: CurveShape) -> Result<Self> {
        let (lo, hi) = shape.range();
        if !(hi > lo) {
            return Err(Error::BadParams("curve has an empty parameter range".into()));
        }
        let dim = shape.dim();
        Ok(ChartCurve { pieces: vec![Piece { shape: Arc::new(shape), lo, hi, reversed: false }], t0: lo, periods: vec![None; dim] })
    }

    pub fn segment(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::BadParams("segment endpoints differ in dimension".into()));
        }
        Self::from_shape(CurveShape::Segment { a: a.to_vec(), b: b.to_vec() })
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::BadParams(format!("circle radius must be positive, got {radius}")));
        }
        Self::from_shape(CurveShape::Circle { center, radius })
    }

    pub fn latitude(value: f64) -> Result<Self> {
        Self::from_shape(CurveShape::Latitude { value })
    }

    /// Closed polygon through `vertices` (the first vertex is repeated at the end).
    pub fn polygon(vertices: &[Vec<f64>]) -> Result<Self> {
        if vertices.len() < 2 || vertices.iter().any(|v| v.len() != vertices[0].len()) {
            return Err(Error::BadParams("polygon needs at least two vertices of equal dimension".into()));
        }
        let mut v = vertices.to_vec();
        v.push(vertices[0].clone());
        Self::from_shape(CurveShape::Polygon { vertices: v })
    }

    /// Open polyline through `vertices`.
    pub fn polyline(vertices: &[Vec<f64>]) -> Result<Self> {
        if vertices.len() < 2 || vertices.iter().any(|v| v.len() != vertices[0].len()) {
            return Err(Error::BadParams("polyline needs at least two vertices of equal dimension".into()));
        }
        Self::from_shape(CurveShape::Polygon { vertices: vertices.to_vec() })
    }

    pub fn sampled(times: &[f64], points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || points.len() != times.len() || points.iter().any(|p| p.len() != dim) {
            return Err(Error::BadParams("sampled curve needs equal-length time and point lists".into()));
        }
        let splines = (0..dim)
            .map(|k| CubicSpline::new(times.to_vec(), points.iter().map(|p| p[k]).collect()))
            .collect::<Result<_>>()?;
        Self::from_shape(CurveShape::Sampled { splines })
    }

    /// Reads `t, x₁, …` CSV rows.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let rows = read_numeric_csv(file)?;
        if rows.iter().any(|r| r.len() < 2) {
            return Err(Error::Parse(format!("{}: rows must be `t, x1, ...`", path.display())));
        }
        let times: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let points: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
        Self::sampled(&times, &points)
    }

    /// Parses `segment:x0,y0,x1,y1`, `circle:cx,cy,r`, `latitude:v`,
    /// `polygon:x0,y0,x1,y1,…`, or a CSV path.
    pub fn parse(spec: &str) -> Result<Self> {
        let nums = |s: &str| parse_list(s).ok_or_else(|| Error::Parse(format!("bad numbers in curve `{spec}`")));
        match spec.split_once(':') {
            Some(("segment", rest)) => {
                let v = nums(rest)?;
                if v.len() % 2 != 0 || v.is_empty() {
                    return Err(Error::Parse(format!("segment needs two points, got `{rest}`")));
                }
                let half = v.len() / 2;
                Self::segment(&v[..half], &v[half..])
            }
            Some(("circle", rest)) => match nums(rest)?.as_slice() {
                [cx, cy, r] => Self::circle([*cx, *cy], *r),
                _ => Err(Error::Parse(format!("circle needs cx,cy,r, got `{rest}`"))),
            },
            Some(("latitude", rest)) => match nums(rest)?.as_slice() {
                [v] => Self::latitude(*v),
                _ => Err(Error::Parse(format!("latitude needs one value, got `{rest}`"))),
            },
            Some(("polygon", rest)) => {
                let v = nums(rest)?;
                if v.len() % 2 != 0 || v.len() < 4 {
                    return Err(Error::Parse(format!("polygon needs pairs of coordinates, got `{rest}`")));
                }
                Self::polygon(&v.chunks(2).map(|c| c.to_vec()).collect::<Vec<_>>())
            }
            _ => Self::read_csv(Path::new(spec)),
        }
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].shape.dim()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.pieces.iter().map(Piece::duration).sum::<f64>())
    }

    /// Declares periodic chart coordinates (used for loop closure).
    pub fn with_periods(mut self, periods: Vec<Option<f64>>) -> Self {
        self.periods = periods;
        self
    }

    /// Takes periods from a gauge's chart.
    pub fn with_gauge_periods(self, gauge: &CartanGauge) -> Self {
        let p = (0..self.dim()).map(|i| gauge.period(i)).collect();
        self.with_periods(p)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let mut start = self.t0;
        for (k, p) in self.pieces.iter().enumerate() {
            let end = start + p.duration();
            if t <= end || k + 1 == self.pieces.len() {
                return (k, t - start);
            }
            start = end;
        }
        unreachable!("curve has at least one piece")
    }

    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (k, u) = self.locate(t);
        self.pieces[k].eval(u, None)
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        self.eval(t).0
    }

    /// Evaluation from inside the smooth stretch `[lo, hi]`.
    pub fn eval_within(&self, t: f64, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let mid = 0.5 * (lo + hi);
        let (k, um) = self.locate(mid);
        let start = mid - um;
        self.pieces[k].eval(t - start, Some(um))
    }

    /// Parameters where the velocity may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut start = self.t0;
        for (k, p) in self.pieces.iter().enumerate() {
            for b in p.shape.breakpoints() {
                let u = if p.reversed { p.hi - b } else { b - p.lo };
                if u > 0.0 && u < p.duration() {
                    out.push(start + u);
                }
            }
            start += p.duration();
            if k + 1 < self.pieces.len() {
                out.push(start);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Endpoint gap measured modulo the declared periods.
    pub fn closure_gap(&self) -> f64 {
        let (t0, t1) = self.range();
        let (a, b) = (self.position(t0), self.position(t1));
        a.iter()
            .zip(&b)
            .enumerate()
            .map(|(i, (a, b))| {
                let d = b - a;
                match self.periods.get(i).copied().flatten() {
                    Some(p) => (d - p * (d / p).round()).abs(),
                    None => d.abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn is_closed(&self) -> bool {
        self.closure_gap() < CLOSURE_GAP
    }

    pub fn reversed(&self) -> Self {
        let pieces = self.pieces.iter().rev().map(|p| Piece { reversed: !p.reversed, ..p.clone() }).collect();
        ChartCurve { pieces, t0: self.t0, periods: self.periods.clone() }
    }

    /// `self` followed by `other`, reparametrized to continue in time.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::BadParams("cannot concatenate curves of different dimension".into()));
        }
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        Ok(ChartCurve { pieces, t0: self.t0, periods: self.periods.clone() })
    }

    /// The part of the curve over `[a, b]`, keeping the original parameter.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let (t0, t1) = self.range();
        if !(a >= t0 && b <= t1 && b > a) {
            return Err(Error::BadParams(format!("[{a}, {b}] is not inside [{t0}, {t1}]")));
        }
        let mut pieces = Vec::new();
        let mut start = t0;
        for p in &self.pieces {
            let end = start + p.duration();
            let (lo, hi) = (a.max(start), b.min(end));
            if hi > lo {
                let (u0, u1) = (lo - start, hi - start);
                let (l, h) = if p.reversed { (p.hi - u1, p.hi - u0) } else { (p.lo + u0, p.lo + u1) };
                pieces.push(Piece { lo: l, hi: h, ..p.clone() });
            }
            start = end;
        }
        Ok(ChartCurve { pieces, t0: a, periods: self.periods.clone() })
    }

    /// The same loop started at parameter `s`.
    pub fn rebased(&self, s: f64) -> Result<Self> {
        let (t0, t1) = self.range();
        if s <= t0 || s >= t1 {
            return Err(Error::BadParams(format!("base point {s} must be interior to [{t0}, {t1}]")));
        }
        self.restrict(s, t1)?.concat(&self.restrict(t0, s)?)
    }
}

/// `A(t) = Σ ẋᵢ(t) A_i(x(t))` along a curve, on the section `h ≡ 1`.
pub struct DevelopmentSignal<'a> {
    gauge: &'a CartanGauge,
    curve: &'a ChartCurve,
    failure: Mutex<Option<Error>>,
}

impl<'a> DevelopmentSignal<'a> {
    pub fn new(gauge: &'a CartanGauge, curve: &'a ChartCurve) -> Result<Self> {
        if curve.dim() != gauge.chart_dim() {
            return Err(Error::BadParams(format!(
                "curve has dimension {} but the chart has dimension {}",
                curve.dim(),
                gauge.chart_dim()
            )));
        }
        Ok(DevelopmentSignal { gauge, curve, failure: Mutex::new(None) })
    }

    fn value(&self, x: &[f64], v: &[f64]) -> Coords {
        match self.gauge.eta(x, v) {
            Ok(a) => a,
            Err(e) => {
                self.failure.lock().expect("signal lock").get_or_insert(e);
                Coords::from_element(self.gauge.algebra().dim(), f64::NAN)
            }
        }
    }

    /// The first evaluation error, if any.
    pub fn take_failure(&self) -> Option<Error> {
        self.failure.lock().expect("signal lock").take()
    }
}

impl DarbouxSignal for DevelopmentSignal<'_> {
    fn dim(&self) -> usize {
        self.gauge.algebra().dim()
    }
    fn domain(&self) -> (f64, f64) {
        self.curve.range()
    }
    fn eval(&self, t: f64) -> Coords {
        let (x, v) = self.curve.eval(t);
        self.value(&x, &v)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.curve.breakpoints()
    }
    fn eval_within(&self, t: f64, lo: f64, hi: f64) -> Coords {
        let (x, v) = self.curve.eval_within(t, lo, hi);
        self.value(&x, &v)
    }
}

/// Development of `curve` into the model group, starting at the identity.
pub fn develop(gauge: &CartanGauge, curve: &ChartCurve, method: Method, h: f64) -> Result<GroupTrajectory> {
    let (t0, t1) = curve.range();
    let start = curve.position(t0);
    let report = gauge.validate(&start)?;
    if !report.invertible {
        return Err(Error::SolderingSingular { condition: report.condition });
    }
    let signal = DevelopmentSignal::new(gauge, curve)?;
    let m = gauge.algebra().matrix_size();
    let result = solve(gauge.algebra(), &signal, &DMatrix::identity(m, m), t0, t1, method, h);
    match (result, signal.take_failure()) {
        (_, Some(e)) => Err(e),
        (r, None) => r,
    }
}

#[derive(Debug, Clone)]
pub struct HolonomyResult {
    pub element: DMatrix<f64>,
    /// `atan2` of the rotation block for the e2 model, in (−π, π].
    pub rotation_angle: Option<f64>,
    /// Rotation accumulated continuously along the development.
    pub winding: Option<f64>,
    /// Size of the translation part (e2), or `max|g − I|` otherwise.
    pub translation_defect: f64,
    pub trajectory: GroupTrajectory,
}

fn rotation_of(g: &DMatrix<f64>) -> f64 {
    g[(0, 1)].atan2(g[(0, 0)])
}

/// Holonomy of a closed loop: its development endpoint from the identity.
pub fn holonomy(gauge: &CartanGauge, curve: &ChartCurve, method: Method, h: f64) -> Result<HolonomyResult> {
    let lp = curve.clone().with_gauge_periods(gauge);
    let gap = lp.closure_gap();
    if !(gap < CLOSURE_GAP) {
        return Err(Error::LoopNotClosed { gap });
    }
    let trajectory = develop(gauge, &lp, method, h)?;
    let element = trajectory.endpoint().clone();
    let is_e2 = gauge.algebra().name() == "e2";
    let (rotation_angle, winding, translation_defect) = if is_e2 {
        let mut wind = 0.0;
        let mut prev = 0.0;
        for g in &trajectory.matrices[1..] {
            let a = rotation_of(g);
            let mut d = a - prev;
            d -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
            wind += d;
            prev = a;
        }
        (Some(rotation_of(&element)), Some(wind), element[(0, 2)].hypot(element[(1, 2)]))
    } else {
        let m = element.nrows();
        (None, None, (&element - DMatrix::identity(m, m)).amax())
    };
    Ok(HolonomyResult { element, rotation_angle, winding, translation_defect, trajectory })
}

/// Reduces an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = a - tau * (a / tau).round();
    if r <= -std::f64::consts::PI {
        r + tau
    } else {
        r
    }
}

/// Sampled bundle path `(x(t), fiber(t))`.
#[derive(Debug, Clone)]
pub struct BundleTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub fiber: Vec<Vec<f64>>,
    /// Why integration stopped early, if it did.
    pub stopped: Option<Error>,
}

impl BundleTrajectory {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let d = self.points[0].len();
        let f = self.fiber[0].len();
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        header.extend((0..f).map(|i| format!("fiber{i}")));
        writeln!(w, "{}", header.join(","))?;
        for ((t, x), fb) in self.times.iter().zip(&self.points).zip(&self.fiber) {
            let row: Vec<String> = std::iter::once(t).chain(x).chain(fb).map(|v| crate::lie_equation::fmt_f64(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrates the bundle path whose Darboux derivative under the full
/// connection is `signal`, starting at `(x, fiber)`.
pub fn antidevelop(
    gauge: &CartanGauge,
    signal: &dyn DarbouxSignal,
    x: &[f64],
    fiber: &[f64],
    h: f64,
) -> Result<BundleTrajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::BadParams(format!("step size must be positive, got {h}")));
    }
    if x.len() != gauge.chart_dim() || fiber.len() != gauge.model().h_indices().len() {
        return Err(Error::BadParams("start point or fiber has the wrong dimension".into()));
    }
    let report = gauge.validate(x)?;
    if !report.invertible {
        return Err(Error::SolderingSingular { condition: report.condition });
    }
    let d = x.len();
    let (t0, t1) = signal.domain();
    let mut cuts = vec![t0];
    cuts.extend(signal.breakpoints().into_iter().filter(|&b| b > t0 && b < t1));
    cuts.push(t1);
    let mut y: Vec<f64> = x.iter().chain(fiber).copied().collect();
    let mut out = BundleTrajectory { times: vec![t0], points: vec![x.to_vec()], fiber: vec![fiber.to_vec()], stopped: None };
    for piece in cuts.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
            let a = signal.eval_within(t, lo, hi);
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("signal is not finite at t = {t}")));
            }
            let (xd, fd) = gauge.bundle_velocity(&y[..d], &y[d..], &a)?;
            Ok(xd.into_iter().chain(fd).collect())
        };
        let n = (((hi - lo) / h) - 1e-9).ceil().max(1.0) as usize;
        let step = (hi - lo) / n as f64;
        for k in 0..n {
            let t = lo + k as f64 * step;
            match rk4_step(&rhs, t, &y, step) {
                Ok(next) => y = next,
                Err(e) => {
                    out.stopped = Some(e);
                    return Ok(out);
                }
            }
            out.times.push(if k + 1 == n { hi } else { t + step });
            out.points.push(y[..d].to_vec());
            out.fiber.push(y[d..].to_vec());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RollResult {
    pub times: Vec<f64>,
    /// Contact point on the second surface.
    pub trace: Vec<Vec<f64>>,
    /// Frame angle of the second surface relative to the first.
    pub rotation: Vec<f64>,
    pub stopped: Option<Error>,
}

/// Rolls surface B along `curve` on surface A without slipping or twisting,
/// starting with contact at `start_b` and relative frame angle `angle`.
pub fn roll(
    ma: &SurfaceMetric,
    mb: &SurfaceMetric,
    curve: &ChartCurve,
    start_b: &[f64],
    angle: f64,
    h: f64,
) -> Result<RollResult> {
    let ga = levi_civita_gauge(ma)?;
    let gb = levi_civita_gauge(mb)?;
    let start = curve.position(curve.range().0);
    let report = ga.validate(&start)?;
    if !report.invertible {
        return Err(Error::SolderingSingular { condition: report.condition });
    }
    let signal = DevelopmentSignal::new(&ga, curve)?;
    let tr = antidevelop(&gb, &signal, start_b, &[angle], h)?;
    let stopped = signal.take_failure().or(tr.stopped);
    Ok(RollResult { times: tr.times, trace: tr.points, rotation: tr.fiber.iter().map(|f| f[0]).collect(), stopped })
}

#[derive(Debug, Clone)]
pub struct ProbeEntry {
    pub eps: f64,
    pub estimate: Coords,
    /// `|estimate − k(A,B)| / |k(A,B)|`, or the absolute error when `k(A,B) = 0`.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct ParallelogramReport {
    pub reference: Coords,
    pub entries: Vec<ProbeEntry>,
}

/// Steps per leg of the probe's flows.
const PROBE_STEPS: usize = 64;

fn flow_for(gauge: &CartanGauge, a: &Coords, y: &mut Vec<f64>, time: f64) -> Result<()> {
    let d = gauge.chart_dim();
    let rhs = |_: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (xd, fd) = gauge.bundle_velocity(&y[..d], &y[d..], a)?;
        Ok(xd.into_iter().chain(fd).collect())
    };
    let step = time / PROBE_STEPS as f64;
    for k in 0..PROBE_STEPS {
        *y = rk4_step(&rhs, k as f64 * step, y, step)?;
    }
    Ok(())
}

/// Flows the constant fields `A, B, −A, −B` for time ε each, then closes the
/// model loop with `−λ`, `λ = log(e^{εA}e^{εB}e^{−εA}e^{−εB})`, and reads the
/// gap through ω at the start. A flat geometry closes the loop exactly; the
/// leading gap is `−ε² k(A, B)`, so the estimate is `−ω(gap)/ε²`.
pub fn parallelogram_probe(gauge: &CartanGauge, x: &[f64], a: &Coords, b: &Coords, eps: &[f64]) -> Result<ParallelogramReport> {
    let alg = gauge.algebra();
    let model = gauge.model();
    let leak = model.h_indices().iter().fold(0.0_f64, |m, &i| m.max(a[i].abs()).max(b[i].abs()));
    if leak > 0.0 {
        return Err(Error::BadParams("probe directions must lie in the soldering complement".into()));
    }
    let curv = gauge.curvature(x)?;
    let solder = model.solder_indices();
    let mut reference = alg.zero();
    for (p, &i) in solder.iter().enumerate() {
        for (q, &j) in solder.iter().enumerate() {
            reference += curv.pair(p, q) * (a[i] * b[j]);
        }
    }
    let d = gauge.chart_dim();
    let nf = model.h_indices().len();
    let mut entries = Vec::new();
    for &e in eps {
        let m = alg.matrix_size();
        let prod = alg.exp(a, e) * alg.exp(b, e) * alg.exp(a, -e) * alg.exp(b, -e);
        let lambda = alg.project(&expm::log_near_identity(&prod)?)?;
        debug_assert_eq!(prod.nrows(), m);
        let mut y: Vec<f64> = x.iter().copied().chain(std::iter::repeat_n(0.0, nf)).collect();
        for (field, time) in [(a.clone(), e), (b.clone(), e), (-a, e), (-b, e), (-&lambda, 1.0)] {
            flow_for(gauge, &field, &mut y, time)?;
        }
        let dx: Vec<f64> = (0..d).map(|i| y[i] - x[i]).collect();
        let mut omega = gauge.eta(x, &dx)?;
        for (k, &hi) in model.h_indices().iter().enumerate() {
            omega[hi] += y[d + k];
        }
        let estimate = -omega / (e * e);
        let diff = (&estimate - &reference).norm();
        let scale = reference.norm();
        let error = if scale > 0.0 { diff / scale } else { diff };
        entries.push(ProbeEntry { eps: e, estimate, error });
    }
    Ok(ParallelogramReport { reference, entries })
}
