//! Lie equations `g⁻¹ġ = A(t)` solved with left-update geometric integrators.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie::{expm, Coords, LieAlgebra};
use crate::spline::CubicSpline;

/// Exponential arguments above this norm abort the solve.
pub const MAX_STEP_NORM: f64 = 10.0;

/// A time-dependent algebra element given in basis coordinates.
pub trait DarbouxSignal: Send + Sync {
    fn dim(&self) -> usize;

    /// Closed interval on which `eval` is guaranteed to succeed.
    fn domain(&self) -> (f64, f64);

    fn eval(&self, t: f64) -> Coords;

    /// Interior times where the signal may be discontinuous or non-smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Evaluation as seen from inside the smooth piece `[lo, hi]`; lets
    /// integrators use one-sided limits at breakpoints.
    fn eval_within(&self, t: f64, _lo: f64, _hi: f64) -> Coords {
        self.eval(t)
    }
}

/// A signal backed by a closure.
pub struct FnSignal<F> {
    dim: usize,
    domain: (f64, f64),
    f: F,
}

impl<F: Fn(f64) -> Coords + Send + Sync> FnSignal<F> {
    pub fn new(dim: usize, domain: (f64, f64), f: F) -> Self {
        FnSignal { dim, domain, f }
    }
}

impl<F: Fn(f64) -> Coords + Send + Sync> DarbouxSignal for FnSignal<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn eval(&self, t: f64) -> Coords {
        (self.f)(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Value of the sample at the left end of each interval.
    PiecewiseConstant,
    Linear,
    Cubic,
}

/// Samples `(tᵢ, Aᵢ)` with an interpolation rule.
#[derive(Debug, Clone)]
pub struct TabulatedSignal {
    times: Vec<f64>,
    values: Vec<Coords>,
    interp: Interpolation,
    splines: Vec<CubicSpline>,
}

impl TabulatedSignal {
    pub fn new(times: Vec<f64>, values: Vec<Coords>, interp: Interpolation) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::BadParams("tabulated signal needs at least two samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadParams("signal times must be strictly increasing".into()));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::BadParams("signal samples have inconsistent widths".into()));
        }
        let splines = if interp == Interpolation::Cubic {
            (0..dim)
                .map(|k| CubicSpline::new(times.clone(), values.iter().map(|v| v[k]).collect()))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(TabulatedSignal { times, values, interp, splines })
    }

    /// Reads CSV rows `t, a₁, …, aₙ`; lines starting with `#` and a
    /// non-numeric header row are skipped.
    pub fn read_csv<R: Read>(reader: R, interp: Interpolation) -> Result<Self> {
        let rows = read_numeric_csv(reader)?;
        let mut times = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() < 2 {
                return Err(Error::Parse("signal rows need a time and at least one coordinate".into()));
            }
            times.push(row[0]);
            values.push(Coords::from_column_slice(&row[1..]));
        }
        Self::new(times, values, interp)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn interval(&self, t: f64) -> usize {
        match self.times.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(self.times.len() - 2),
        }
    }

    fn eval_on(&self, i: usize, t: f64) -> Coords {
        match self.interp {
            Interpolation::PiecewiseConstant => self.values[i].clone(),
            Interpolation::Linear => {
                let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
                &self.values[i] * (1.0 - w) + &self.values[i + 1] * w
            }
            Interpolation::Cubic => Coords::from_iterator(self.splines.len(), self.splines.iter().map(|s| s.eval(t))),
        }
    }
}

impl DarbouxSignal for TabulatedSignal {
    fn dim(&self) -> usize {
        self.values[0].len()
    }

    fn domain(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    fn eval(&self, t: f64) -> Coords {
        self.eval_on(self.interval(t), t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.interp {
            Interpolation::Cubic => Vec::new(),
            _ => self.times[1..self.times.len() - 1].to_vec(),
        }
    }

    fn eval_within(&self, t: f64, lo: f64, hi: f64) -> Coords {
        let mid = 0.5 * (lo + hi);
        let i = self.interval(mid);
        self.eval_on(i, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LieEuler,
    Rkmk4,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lie_euler" => Ok(Method::LieEuler),
            "rkmk4" => Ok(Method::Rkmk4),
            other => Err(Error::BadParams(format!("unknown method `{other}` (expected lie_euler or rkmk4)"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::LieEuler => "lie_euler",
            Method::Rkmk4 => "rkmk4",
        })
    }
}

/// Sampled solution of a Lie equation.
#[derive(Debug, Clone)]
pub struct GroupTrajectory {
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
    pub defects: Vec<f64>,
}

impl GroupTrajectory {
    pub fn endpoint(&self) -> &DMatrix<f64> {
        self.matrices.last().expect("trajectory is never empty")
    }

    pub fn max_defect(&self) -> f64 {
        self.defects.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// Rows `t, g₁₁, g₁₂, …, g_mm, defect` in 17-significant-digit form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.matrices[0].nrows();
        let mut header = vec!["t".to_string()];
        for i in 0..m {
            for j in 0..m {
                header.push(format!("g{}{}", i + 1, j + 1));
            }
        }
        header.push("defect".into());
        writeln!(w, "{}", header.join(","))?;
        for ((t, g), d) in self.times.iter().zip(&self.matrices).zip(&self.defects) {
            let mut row = vec![fmt_f64(*t)];
            for i in 0..m {
                for j in 0..m {
                    row.push(fmt_f64(g[(i, j)]));
                }
            }
            row.push(fmt_f64(*d));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Deterministic 17-significant-digit formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses numeric CSV rows, skipping `#` comments and a leading text header.
pub fn read_numeric_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", line + 1))),
        }
    }
    Ok(rows)
}

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Inverse of the derivative of exp, truncated after the fourth-order terms.
fn dexpinv(theta: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let c1 = commutator(theta, a);
    let c2 = commutator(theta, &c1);
    a + c1 * 0.5 + c2 * (1.0 / 12.0)
}

/// Algebra-valued increment of one step on the smooth piece `[lo, hi]`.
fn increment(
    alg: &LieAlgebra,
    signal: &dyn DarbouxSignal,
    t: f64,
    h: f64,
    lo: f64,
    hi: f64,
    method: Method,
) -> DMatrix<f64> {
    let a = |s: f64| alg.to_matrix(&signal.eval_within(s, lo, hi));
    match method {
        Method::LieEuler => a(t) * h,
        Method::Rkmk4 => {
            let a_mid = a(t + 0.5 * h);
            let k1 = a(t) * h;
            let k2 = dexpinv(&(&k1 * 0.5), &a_mid) * h;
            let k3 = dexpinv(&(&k2 * 0.5), &a_mid) * h;
            let k4 = dexpinv(&k3, &a(t + h)) * h;
            (k1 + (k2 + k3) * 2.0 + k4) / 6.0
        }
    }
}

/// Solves `g⁻¹ġ = A(t)`, `g(t0) = g0` on `[t0, t1]` with nominal step `h`.
///
/// Signal breakpoints inside the interval are hit exactly; each smooth
/// piece is divided into equal steps no longer than `h`.
pub fn solve(
    alg: &LieAlgebra,
    signal: &dyn DarbouxSignal,
    g0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    method: Method,
    h: f64,
) -> Result<GroupTrajectory> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::BadParams(format!("step size must be positive, got {h}")));
    }
    if !(t1 > t0) {
        return Err(Error::BadParams(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    if signal.dim() != alg.dim() {
        return Err(Error::BadParams(format!(
            "signal has {} coordinates but `{}` has dimension {}",
            signal.dim(),
            alg.name(),
            alg.dim()
        )));
    }
    let m = alg.matrix_size();
    if g0.nrows() != m || g0.ncols() != m || g0.clone().try_inverse().is_none() {
        return Err(Error::SingularMatrix("initial condition must be an invertible matrix of the algebra's size".into()));
    }
    let (d0, d1) = signal.domain();
    let slack = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
    if t0 < d0 - slack || t1 > d1 + slack {
        return Err(Error::Domain(format!("[{t0}, {t1}] is outside the signal domain [{d0}, {d1}]")));
    }

    let mut cuts = vec![t0];
    cuts.extend(signal.breakpoints().into_iter().filter(|&b| b > t0 && b < t1));
    cuts.push(t1);

    let mut times = vec![t0];
    let mut matrices = vec![g0.clone()];
    let mut defects = vec![alg.constraint_defect(g0)];
    let mut g = g0.clone();
    for piece in cuts.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let n = (((hi - lo) / h) - 1e-9).ceil().max(1.0) as usize;
        let step = (hi - lo) / n as f64;
        for k in 0..n {
            let t = lo + k as f64 * step;
            let theta = increment(alg, signal, t, step, lo, hi, method);
            let (coords, _) = alg.project_unchecked(&theta);
            let norm = coords.norm();
            if norm > MAX_STEP_NORM || !norm.is_finite() {
                return Err(Error::StepTooLarge { norm, t });
            }
            g = &g * expm::exp_with_form(&theta, alg.exp_form());
            times.push(if k + 1 == n { hi } else { lo + (k + 1) as f64 * step });
            defects.push(alg.constraint_defect(&g));
            matrices.push(g.clone());
        }
    }
    Ok(GroupTrajectory { times, matrices, defects })
}
