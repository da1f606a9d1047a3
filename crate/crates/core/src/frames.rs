//! Space curves from curvature and torsion, and back.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometries::poly_eval;
use crate::lie::{registry, Constraint, Coords, LieAlgebra};
use crate::lie_equation::{fmt_f64, solve, DarbouxSignal, Method};
use crate::spline::CubicSpline;

/// Curvature below this has no Frenet frame.
pub const K_MIN: f64 = 1e-8;

/// A scalar function of arclength.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    Polynomial(Vec<f64>),
    Tabulated(CubicSpline),
}

impl ScalarFn {
    pub fn constant(c: f64) -> Self {
        ScalarFn::Polynomial(vec![c])
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarFn::Polynomial(c) => poly_eval(c, s).0,
            ScalarFn::Tabulated(sp) => sp.eval(s),
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            ScalarFn::Polynomial(_) => (f64::NEG_INFINITY, f64::INFINITY),
            ScalarFn::Tabulated(sp) => sp.domain(),
        }
    }
}

/// Curvature, torsion, arclength interval and initial pose (4×4 Euclidean matrix).
#[derive(Debug, Clone)]
pub struct FrenetData {
    pub k: ScalarFn,
    pub t: ScalarFn,
    pub s0: f64,
    pub s1: f64,
    pub pose: DMatrix<f64>,
}

impl FrenetData {
    pub fn new(k: ScalarFn, t: ScalarFn, s0: f64, s1: f64) -> Self {
        FrenetData { k, t, s0, s1, pose: DMatrix::identity(4, 4) }
    }

    pub fn with_pose(mut self, pose: DMatrix<f64>) -> Self {
        self.pose = pose;
        self
    }
}

/// Samples of a reconstructed curve with its Frenet frame (columns T, N, B).
#[derive(Debug, Clone)]
pub struct SpaceCurve {
    pub s: Vec<f64>,
    pub x: Vec<Vector3<f64>>,
    pub frames: Vec<Matrix3<f64>>,
}

impl SpaceCurve {
    /// Largest `‖FᵀF − I‖` over the samples.
    pub fn frame_defect(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| (f.transpose() * f - Matrix3::identity()).amax())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,x,y,z,f11,f12,f13,f21,f22,f23,f31,f32,f33")?;
        for ((s, x), f) in self.s.iter().zip(&self.x).zip(&self.frames) {
            let mut row = vec![fmt_f64(*s), fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(x[2])];
            for i in 0..3 {
                for j in 0..3 {
                    row.push(fmt_f64(f[(i, j)]));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

struct FrenetSignal {
    alg: Arc<LieAlgebra>,
    k: ScalarFn,
    t: ScalarFn,
    domain: (f64, f64),
}

impl DarbouxSignal for FrenetSignal {
    fn dim(&self) -> usize {
        self.alg.dim()
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn eval(&self, s: f64) -> Coords {
        let (k, t) = (self.k.eval(s), self.t.eval(s));
        // Skew rotation block with e₁ as the velocity.
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = -k;
        a[(1, 0)] = k;
        a[(1, 2)] = -t;
        a[(2, 1)] = t;
        a[(0, 3)] = 1.0;
        self.alg.project_unchecked(&a).0
    }
}

/// Solves `g⁻¹ġ = [[Ω, e₁], [0, 0]]` in the Euclidean group with RKMK4.
pub fn frenet_reconstruct(data: &FrenetData, h: f64) -> Result<SpaceCurve> {
    if !(data.s1 > data.s0) {
        return Err(Error::BadParams(format!("need s1 > s0, got [{}, {}]", data.s0, data.s1)));
    }
    for f in [&data.k, &data.t] {
        let (lo, hi) = f.domain();
        if data.s0 < lo || data.s1 > hi {
            return Err(Error::Domain(format!("[{}, {}] exceeds the tabulated range [{lo}, {hi}]", data.s0, data.s1)));
        }
    }
    let n = ((data.s1 - data.s0) / h).ceil().max(1.0) as usize;
    for i in 0..=n {
        let s = data.s0 + (data.s1 - data.s0) * i as f64 / n as f64;
        let k = data.k.eval(s);
        if !(k >= K_MIN) {
            return Err(Error::CurvatureTooSmall { s, k });
        }
    }
    let alg = Arc::new(registry::algebra("se3")?);
    if data.pose.shape() != (4, 4) {
        return Err(Error::BadParams("initial pose must be a 4×4 matrix".into()));
    }
    // Reflected frames are allowed: only orthogonality and the affine row are required.
    let r = data.pose.view((0, 0), (3, 3)).into_owned();
    let defect = (r.transpose() * &r - DMatrix::identity(3, 3))
        .amax()
        .max(Constraint::AffineBottomRow.defect(&data.pose));
    if defect > 1e-9 {
        return Err(Error::BadParams(format!("initial pose is not a rigid motion (defect {defect:.3e})")));
    }
    let signal = FrenetSignal { alg: alg.clone(), k: data.k.clone(), t: data.t.clone(), domain: (data.s0, data.s1) };
    let tr = solve(&alg, &signal, &data.pose, data.s0, data.s1, Method::Rkmk4, h)?;
    Ok(SpaceCurve {
        s: tr.times.clone(),
        x: tr.matrices.iter().map(|g| Vector3::new(g[(0, 3)], g[(1, 3)], g[(2, 3)])).collect(),
        frames: tr.matrices.iter().map(|g| Matrix3::from_fn(|i, j| g[(i, j)])).collect(),
    })
}

/// Curvature and torsion measured from uniformly spaced samples.
#[derive(Debug, Clone)]
pub struct FrenetMeasurement {
    pub s: Vec<f64>,
    pub k: Vec<f64>,
    /// `None` where the curvature is too small for the torsion to exist.
    pub t: Vec<Option<f64>>,
    /// Index of each measurement in the input samples.
    pub index: Vec<usize>,
}

impl FrenetMeasurement {
    /// Torsion everywhere, failing at the first degenerate sample.
    pub fn torsion(&self) -> Result<Vec<f64>> {
        self.t
            .iter()
            .zip(&self.index)
            .map(|(t, &i)| t.ok_or(Error::DegenerateCurve { index: i }))
            .collect()
    }
}

/// Discrete Frenet formulas with fourth-order centered differences at the
/// interior samples (three are dropped at each end):
/// `k = |x'×x''|/|x'|³`, `t = det(x', x'', x''')/|x'×x''|²`.
pub fn curvature_torsion(x: &[Vector3<f64>], s0: f64, ds: f64) -> Result<FrenetMeasurement> {
    if x.len() < 7 {
        return Err(Error::BadParams("need at least seven samples".into()));
    }
    if !(ds > 0.0) {
        return Err(Error::BadParams(format!("sample spacing must be positive, got {ds}")));
    }
    let mut out = FrenetMeasurement { s: Vec::new(), k: Vec::new(), t: Vec::new(), index: Vec::new() };
    for i in 3..x.len() - 3 {
        let p = |o: isize| x[(i as isize + o) as usize];
        let d1 = (p(-2) - p(-1) * 8.0 + p(1) * 8.0 - p(2)) / (12.0 * ds);
        let d2 = (-p(-2) + p(-1) * 16.0 - p(0) * 30.0 + p(1) * 16.0 - p(2)) / (12.0 * ds * ds);
        let d3 = (p(-3) - p(-2) * 8.0 + p(-1) * 13.0 - p(1) * 13.0 + p(2) * 8.0 - p(3)) / (8.0 * ds * ds * ds);
        let cross = d1.cross(&d2);
        let speed = d1.norm();
        let k = cross.norm() / speed.powi(3);
        let t = (k > 10.0 * K_MIN).then(|| cross.dot(&d3) / cross.norm_squared());
        out.s.push(s0 + i as f64 * ds);
        out.k.push(k);
        out.t.push(t);
        out.index.push(i);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn constant(k: f64, t: f64, s1: f64) -> FrenetData {
        FrenetData::new(ScalarFn::constant(k), ScalarFn::constant(t), 0.0, s1)
    }

    #[test]
    fn unit_circle_closes() {
        let c = frenet_reconstruct(&constant(1.0, 0.0, TAU), 1e-3).unwrap();
        let end = c.x.last().unwrap();
        assert!(end.norm() < 1e-8);
        assert!((c.frames.last().unwrap() - Matrix3::identity()).amax() < 1e-8);
        assert!(c.frame_defect() < 1e-12);
    }

    #[test]
    fn helix_radius_and_pitch() {
        let (k, t) = (1.0, 0.5);
        let w2 = k * k + t * t;
        let c = frenet_reconstruct(&constant(k, t, 20.0), 1e-3).unwrap();
        let (f0, x0) = (c.frames[0], c.x[0]);
        let axis = (f0.column(0) * t + f0.column(2) * k) / w2.sqrt();
        let center = x0 + f0.column(1) * (k / w2);
        for x in &c.x {
            let v = x - center;
            let radial = v - axis * v.dot(&axis);
            assert!((radial.norm() - k / w2).abs() < 1e-6);
        }
        // One turn takes arclength 2π/ω and climbs 2πt/ω².
        let w = w2.sqrt();
        let i = c.s.iter().position(|s| *s >= TAU / w).unwrap();
        let rise = (c.x[i] - x0).dot(&axis) - (c.s[i] - TAU / w) * t / w;
        assert!((rise - TAU * t / w2).abs() < 1e-3);
    }

    #[test]
    fn mirrored_pose_mirrors_the_circle() {
        let mut pose = DMatrix::identity(4, 4);
        pose[(2, 2)] = -1.0;
        let plain = frenet_reconstruct(&constant(1.0, 0.3, 3.0), 1e-3).unwrap();
        // The reflection flips the binormal; the curve is the mirror image only for t = 0.
        let d = constant(1.0, 0.0, 3.0);
        let a = frenet_reconstruct(&d, 1e-3).unwrap();
        let b = frenet_reconstruct(&d.clone().with_pose(pose), 1e-3).unwrap();
        for (p, q) in a.x.iter().zip(&b.x) {
            assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12 && (p[2] + q[2]).abs() < 1e-12);
        }
        assert!(plain.x.last().unwrap()[2].abs() > 0.1);
    }

    #[test]
    fn rigid_motions_act_exactly() {
        let se3 = registry::algebra("se3").unwrap();
        let g = se3.exp(&Coords::from_vec(vec![0.3, -0.2, 0.9, 1.0, 2.0, -0.5]), 1.0);
        let d = FrenetData::new(ScalarFn::Polynomial(vec![1.0, 0.1]), ScalarFn::Polynomial(vec![0.2, 0.0, 0.05]), 0.0, 5.0);
        let a = frenet_reconstruct(&d, 1e-2).unwrap();
        let b = frenet_reconstruct(&d.clone().with_pose(g.clone()), 1e-2).unwrap();
        let r = Matrix3::from_fn(|i, j| g[(i, j)]);
        let v = Vector3::new(g[(0, 3)], g[(1, 3)], g[(2, 3)]);
        for (p, q) in a.x.iter().zip(&b.x) {
            assert!((r * p + v - q).amax() < 1e-12);
        }
    }

    #[test]
    fn small_curvature_is_rejected() {
        assert!(matches!(frenet_reconstruct(&constant(0.0, 1.0, 1.0), 0.1), Err(Error::CurvatureTooSmall { .. })));
        let d = FrenetData::new(ScalarFn::Polynomial(vec![1.0, -1.0]), ScalarFn::constant(0.0), 0.0, 2.0);
        assert!(matches!(frenet_reconstruct(&d, 0.1), Err(Error::CurvatureTooSmall { .. })));
    }

    #[test]
    fn measured_circle_and_line() {
        let n = 10_000;
        let ds = TAU / n as f64;
        let circle: Vec<Vector3<f64>> = (0..=n).map(|i| {
            let a = i as f64 * ds;
            Vector3::new(2.0 * a.cos(), 2.0 * a.sin(), 0.0)
        }).collect();
        let m = curvature_torsion(&circle, 0.0, ds).unwrap();
        assert!(m.k.iter().all(|k| (k - 0.5).abs() < 1e-6));
        assert!(m.torsion().unwrap().iter().all(|t| t.abs() < 1e-6));
        let line: Vec<Vector3<f64>> = (0..50).map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        let m = curvature_torsion(&line, 0.0, 1.0).unwrap();
        assert!(m.k.iter().all(|k| *k == 0.0));
        assert!(matches!(m.torsion(), Err(Error::DegenerateCurve { index: 3 })));
    }

    #[test]
    fn round_trip_recovers_inputs() {
        let h = 1e-3;
        let d = FrenetData::new(ScalarFn::Polynomial(vec![1.0, 0.2, -0.03]), ScalarFn::Polynomial(vec![0.5, -0.1]), 0.0, 5.0);
        let c = frenet_reconstruct(&d, h).unwrap();
        let ds = c.s[1] - c.s[0];
        let m = curvature_torsion(&c.x, 0.0, ds).unwrap();
        let t = m.torsion().unwrap();
        for ((s, k), t) in m.s.iter().zip(&m.k).zip(&t) {
            assert!((k - d.k.eval(*s)).abs() < 1e-4 && (t - d.t.eval(*s)).abs() < 1e-4);
        }
        for w in c.x.windows(3) {
            assert!(((w[2] - w[0]).norm() / (2.0 * ds) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn long_run_frame_drift() {
        let c = frenet_reconstruct(&constant(1.0, 0.5, 100.0), 1e-3).unwrap();
        assert!(c.frame_defect() < 1e-9);
    }
}
