//! Constant-field flows, geodesics, spirals and blow-up probes.

use crate::error::{Error, Result};
use crate::gauge::CartanGauge;
use crate::geometries::{LorentzFamily, Profile};
use crate::lie::Coords;

/// Escape and collapse thresholds of the adaptive driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub escape_norm: f64,
    pub boundary: f64,
    pub min_step: f64,
    /// Local error tolerance per unit of state size.
    pub tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { escape_norm: 1e8, boundary: 1e-10, min_step: 1e-12, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub tmax: f64,
    /// Nominal step; the driver subdivides it when the local error demands.
    pub h: f64,
    /// Keep every `stride`-th nominal step (the last sample is always kept).
    pub stride: usize,
    pub thresholds: Thresholds,
}

impl FlowOptions {
    pub fn new(tmax: f64, h: f64) -> Self {
        FlowOptions { tmax, h, stride: 1, thresholds: Thresholds::default() }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::BadParams(format!("step must be positive, got {}", self.h)));
        }
        if !(self.tmax > 0.0 && self.tmax.is_finite()) {
            return Err(Error::BadParams(format!("tmax must be positive, got {}", self.tmax)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    ReachedTmax,
    Escaped { norm: f64, t: f64 },
    StepCollapse { t: f64 },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::ReachedTmax => "reached_tmax",
            Outcome::Escaped { .. } => "escaped",
            Outcome::StepCollapse { .. } => "step_collapse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub outcome: Outcome,
    /// Largest deviation of any conserved monitor from its initial value.
    pub max_drift: f64,
    pub t_end: f64,
}

/// Sampled flow: state vectors plus monitor values per sample.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub state_names: Vec<String>,
    pub monitor_names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitors: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(i) = self.state_names.iter().position(|n| n == name) {
            return Some(self.states.iter().map(|s| s[i]).collect());
        }
        let i = self.monitor_names.iter().position(|n| n == name)?;
        Some(self.monitors.iter().map(|m| m[i]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend(self.state_names.iter().cloned());
        header.extend(self.monitor_names.iter().cloned());
        writeln!(w, "{}", header.join(","))?;
        for ((t, s), m) in self.times.iter().zip(&self.states).zip(&self.monitors) {
            let row: Vec<String> = std::iter::once(t).chain(s).chain(m).map(|v| crate::lie_equation::fmt_f64(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// The pieces of an autonomous or time-dependent ODE the driver needs.
pub struct System<'a> {
    pub rhs: Box<dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + 'a>,
    /// Size used for the escape test.
    pub norm: Box<dyn Fn(&[f64]) -> f64 + 'a>,
    pub boundary: Box<dyn Fn(&[f64]) -> f64 + 'a>,
    pub monitors: Box<dyn Fn(f64, &[f64]) -> Vec<f64> + 'a>,
    /// Which monitors are conserved and count toward drift.
    pub conserved: Vec<bool>,
    /// State components held to an absolute error (angles, which wind
    /// without bound); the rest are relative to their size.
    pub angles: Vec<bool>,
    pub state_names: Vec<String>,
    pub monitor_names: Vec<String>,
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

/// One classical Runge–Kutta step.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok((0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])).collect())
}

enum Sub {
    Accepted(Vec<f64>),
    /// Local error too large.
    Rejected,
    /// A stage left the domain or met a degenerate soldering.
    Failed,
}

/// Step-doubling trial of size `s`.
fn trial(sys: &System, t: f64, y: &[f64], s: f64, tol: f64) -> Sub {
    let scale = |i: usize, b: f64| if sys.angles.get(i).copied().unwrap_or(false) { 1.0 } else { 1.0 + b.abs() };
    let full = rk4_step(&*sys.rhs, t, y, s);
    let half = rk4_step(&*sys.rhs, t, y, 0.5 * s).and_then(|m| rk4_step(&*sys.rhs, t + 0.5 * s, &m, 0.5 * s));
    match (full, half) {
        (Ok(f), Ok(h)) => {
            // Mixed absolute/relative control, component by component.
            let err = f.iter().zip(&h).enumerate().fold(0.0_f64, |m, (i, (a, b))| m.max((a - b).abs() / scale(i, *b))) / 15.0;
            if err.is_finite() && err <= tol {
                Sub::Accepted(h.iter().zip(&f).map(|(h, f)| h + (h - f) / 15.0).collect())
            } else {
                Sub::Rejected
            }
        }
        _ => Sub::Failed,
    }
}

/// Integrates `sys` from `(t0, y0)` to `t0 + tmax`, refining each nominal
/// step as needed and classifying how the run ended.
pub fn integrate(sys: &System, y0: Vec<f64>, t0: f64, opts: &FlowOptions) -> Result<(Trajectory, ProbeReport)> {
    opts.check()?;
    let th = opts.thresholds;
    let m0 = (sys.monitors)(t0, &y0);
    let mut traj = Trajectory {
        state_names: sys.state_names.clone(),
        monitor_names: sys.monitor_names.clone(),
        times: vec![t0],
        states: vec![y0.clone()],
        monitors: vec![m0.clone()],
    };
    let mut drift = 0.0_f64;
    let n_steps = (opts.tmax / opts.h - 1e-9).ceil().max(1.0) as usize;
    let mut y = y0;
    let mut t = t0;
    let mut outcome = Outcome::ReachedTmax;
    'outer: for k in 0..n_steps {
        let t_next = if k + 1 == n_steps { t0 + opts.tmax } else { t0 + (k + 1) as f64 * opts.h };
        let mut s = t_next - t;
        while t < t_next {
            s = s.min(t_next - t);
            match trial(sys, t, &y, s, th.tol) {
                Sub::Accepted(next) => {
                    y = next;
                    t = if t + s >= t_next || (t_next - (t + s)) < 1e-15 * t_next.abs().max(1.0) { t_next } else { t + s };
                    let norm = (sys.norm)(&y);
                    if !norm.is_finite() || norm > th.escape_norm || (sys.boundary)(&y) < th.boundary {
                        outcome = Outcome::Escaped { norm, t };
                    }
                    if outcome != Outcome::ReachedTmax {
                        break 'outer;
                    }
                    s *= 2.0;
                }
                rejected => {
                    s *= 0.5;
                    if s < th.min_step {
                        let norm = (sys.norm)(&y);
                        // A step that keeps hitting the chart edge or a degenerate
                        // soldering is an exit from the chart, not a stiffness failure.
                        let at_edge = matches!(rejected, Sub::Failed) || (sys.boundary)(&y) < th.boundary;
                        outcome = if at_edge { Outcome::Escaped { norm, t } } else { Outcome::StepCollapse { t } };
                        break 'outer;
                    }
                }
            }
        }
        if (k + 1) % opts.stride == 0 || k + 1 == n_steps {
            let m = (sys.monitors)(t, &y);
            for (i, (v, v0)) in m.iter().zip(&m0).enumerate() {
                if sys.conserved.get(i).copied().unwrap_or(false) {
                    drift = drift.max((v - v0).abs());
                }
            }
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.monitors.push(m);
        }
    }
    if outcome != Outcome::ReachedTmax && traj.times.last() != Some(&t) {
        let m = (sys.monitors)(t, &y);
        for (i, (v, v0)) in m.iter().zip(&m0).enumerate() {
            if sys.conserved.get(i).copied().unwrap_or(false) && v.is_finite() {
                drift = drift.max((v - v0).abs());
            }
        }
        traj.times.push(t);
        traj.states.push(y);
        traj.monitors.push(m);
    }
    Ok((traj, ProbeReport { outcome, max_drift: drift, t_end: t }))
}

/// A point of the trivialized bundle: chart point plus fiber coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub x: Vec<f64>,
    pub fiber: Vec<f64>,
    pub t: f64,
}

impl FlowState {
    pub fn new(x: Vec<f64>, fiber: Vec<f64>) -> Self {
        FlowState { x, fiber, t: 0.0 }
    }
}

/// Flow of the constant vector field `A_𝒢` with `ω(A_𝒢) ≡ A`.
pub fn constant_flow(gauge: &CartanGauge, a: &Coords, start: &FlowState, opts: &FlowOptions) -> Result<(Trajectory, ProbeReport)> {
    let d = gauge.chart_dim();
    if start.x.len() != d || a.len() != gauge.algebra().dim() {
        return Err(Error::BadParams("start point or field has the wrong dimension".into()));
    }
    let report = gauge.validate(&start.x)?;
    if !report.invertible {
        return Err(Error::SolderingSingular { condition: report.condition });
    }
    let nf = start.fiber.len();
    let mut names: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    names.extend((0..nf).map(|i| format!("fiber{i}")));
    let sys = System {
        rhs: Box::new(|_, y: &[f64]| {
            let (xd, fd) = gauge.bundle_velocity(&y[..d], &y[d..], a)?;
            Ok(xd.into_iter().chain(fd).collect())
        }),
        norm: Box::new(|y: &[f64]| y[..d].iter().map(|v| v * v).sum::<f64>().sqrt()),
        boundary: Box::new(|y: &[f64]| gauge.boundary_distance(&y[..d])),
        monitors: Box::new(|_, _| Vec::new()),
        conserved: Vec::new(),
        angles: (0..d + nf).map(|i| i >= d).collect(),
        state_names: names,
        monitor_names: Vec::new(),
    };
    let y0 = start.x.iter().chain(&start.fiber).copied().collect();
    integrate(&sys, y0, start.t, opts)
}

/// Unit-speed geodesic of a surface gauge leaving `x` at frame angle `alpha`.
pub fn geodesic_flow(gauge: &CartanGauge, x: &[f64], alpha: f64, opts: &FlowOptions) -> Result<(Trajectory, ProbeReport)> {
    if !gauge.model().is_surface() {
        return Err(Error::BadParams("geodesic flow needs a surface model gauge".into()));
    }
    let a = Coords::from_vec(vec![0.0, alpha.cos(), alpha.sin()]);
    constant_flow(gauge, &a, &FlowState::new(x.to_vec(), vec![0.0]), opts)
}

/// Spiral on a surface of revolution in the `a₀ = 1` normalization:
/// `ż = cos φ`, `θ̇ = −e^{−λ} sin φ`, `φ̇ = −λ' sin φ + c₀`.
///
/// The state carries `J = ∫ e^λ dz` so the identity
/// `e^{λ(z)} sin φ − e^{λ(z₀)} sin φ₀ = c₀ J` can be checked; the monitors
/// are the Clairault quantity `I = e^λ sin φ`, the conserved combination
/// `I − c₀J`, and the residual of the identity solved for `sin φ`.
pub fn revolution_spiral(profile: &Profile, c0: f64, start: [f64; 3], opts: &FlowOptions) -> Result<(Trajectory, ProbeReport)> {
    let (l0, _, _) = profile.eval(start[0])?;
    let i0 = l0.exp() * start[2].sin();
    let (lo, hi) = profile.domain();
    let sys = System {
        rhs: Box::new(|_, y: &[f64]| {
            let (l, dl, _) = profile.eval(y[0])?;
            let (s, c) = y[2].sin_cos();
            let el = l.exp();
            Ok(vec![c, -s / el, -dl * s + c0, el * c])
        }),
        norm: Box::new(|y: &[f64]| y[0].abs()),
        boundary: Box::new(move |y: &[f64]| (y[0] - lo).min(hi - y[0])),
        monitors: Box::new(move |_, y: &[f64]| match profile.eval(y[0]) {
            Ok((l, _, _)) => {
                let el = l.exp();
                let i = el * y[2].sin();
                vec![i, i - c0 * y[3], y[2].sin() - (i0 + c0 * y[3]) / el]
            }
            Err(_) => vec![f64::NAN; 3],
        }),
        conserved: vec![c0 == 0.0, true, false],
        angles: vec![false, true, true, false],
        state_names: ["z", "theta", "phi", "J"].map(String::from).to_vec(),
        monitor_names: ["clairault", "conserved", "identity_residual"].map(String::from).to_vec(),
    };
    integrate(&sys, vec![start[0], start[1], start[2], 0.0], 0.0, opts)
}

/// Residual of the spiral identity between samples `a` and `b`, written
/// for `sin φ(b)`.
pub fn spiral_identity_residual(traj: &Trajectory, profile: &Profile, c0: f64, a: usize, b: usize) -> Result<f64> {
    let (sa, sb) = (&traj.states[a], &traj.states[b]);
    let (la, _, _) = profile.eval(sa[0])?;
    let (lb, _, _) = profile.eval(sb[0])?;
    let predicted = (la - lb).exp() * sa[2].sin() + c0 * (-lb).exp() * (sb[3] - sa[3]);
    Ok(sb[2].sin() - predicted)
}

/// Geodesics of a two-dimensional Lorentz metric; state `(x, y, ẋ, ẏ)`.
///
/// Monitors: the Lagrangian value and, for the f-family, `I = ẋ + f(x)ẏ`.
pub fn lorentz_geodesic(fam: &LorentzFamily, start: [f64; 4], opts: &FlowOptions) -> Result<(Trajectory, ProbeReport)> {
    if fam.boundary_distance(&start) <= 0.0 {
        return Err(Error::Domain("Clifton–Pohl geodesics must start off the origin".into()));
    }
    let lagrangian = move |y: &[f64]| match fam {
        LorentzFamily::CliftonPohl => y[2] * y[3] / (y[0] * y[0] + y[1] * y[1]),
        LorentzFamily::F { .. } => {
            let (f, _) = fam.f(y[0]).expect("f-family");
            y[2] * y[3] + 0.5 * f * y[3] * y[3]
        }
    };
    let is_f = matches!(fam, LorentzFamily::F { .. });
    let sys = System {
        rhs: Box::new(move |_, y: &[f64]| {
            let (x, yy, xd, yd) = (y[0], y[1], y[2], y[3]);
            Ok(match fam {
                LorentzFamily::CliftonPohl => {
                    let q = x * x + yy * yy;
                    if q == 0.0 {
                        return Err(Error::Domain("reached the puncture".into()));
                    }
                    vec![xd, yd, 2.0 * x * xd * xd / q, 2.0 * yy * yd * yd / q]
                }
                LorentzFamily::F { .. } => {
                    let (f, df) = fam.f(x).expect("f-family");
                    vec![xd, yd, -df * xd * yd - 0.5 * f * df * yd * yd, 0.5 * df * yd * yd]
                }
            })
        }),
        norm: Box::new(|y: &[f64]| y.iter().map(|v| v * v).sum::<f64>().sqrt()),
        boundary: Box::new(move |y: &[f64]| fam.boundary_distance(y)),
        monitors: Box::new(move |_, y: &[f64]| {
            let mut m = vec![lagrangian(y)];
            if let Some((f, _)) = fam.f(y[0]) {
                m.push(y[2] + f * y[3]);
            }
            m
        }),
        conserved: if is_f { vec![true, true] } else { vec![true] },
        angles: Vec::new(),
        state_names: ["x", "y", "xdot", "ydot"].map(String::from).to_vec(),
        monitor_names: if is_f { vec!["lagrangian".into(), "killing".into()] } else { vec!["lagrangian".into()] },
    };
    integrate(&sys, start.to_vec(), 0.0, opts)
}

/// Any flow whose completeness can be probed.
pub enum FlowJob<'a> {
    Constant { gauge: &'a CartanGauge, a: Coords, start: FlowState },
    Geodesic { gauge: &'a CartanGauge, x: Vec<f64>, alpha: f64 },
    Spiral { profile: &'a Profile, c0: f64, start: [f64; 3] },
    Lorentz { family: &'a LorentzFamily, start: [f64; 4] },
}

impl FlowJob<'_> {
    pub fn run(&self, opts: &FlowOptions) -> Result<(Trajectory, ProbeReport)> {
        match self {
            FlowJob::Constant { gauge, a, start } => constant_flow(gauge, a, start, opts),
            FlowJob::Geodesic { gauge, x, alpha } => geodesic_flow(gauge, x, *alpha, opts),
            FlowJob::Spiral { profile, c0, start } => revolution_spiral(profile, *c0, *start, opts),
            FlowJob::Lorentz { family, start } => lorentz_geodesic(family, *start, opts),
        }
    }
}

/// Classifies a flow as reaching `tmax`, escaping, or collapsing its step;
/// completeness itself is never asserted.
pub fn blow_up_probe(job: &FlowJob, opts: &FlowOptions) -> Result<ProbeReport> {
    Ok(job.run(opts)?.1)
}
