//! One function per subcommand; each returns its CSV body and result lines.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use cartan_core::flows::{self, FlowOptions, FlowState, ProbeReport, Trajectory};
use cartan_core::frames::{frenet_reconstruct, FrenetData, ScalarFn};
use cartan_core::gauge::CartanGauge;
use cartan_core::geometries::{gauss_curvature, parse_list, surface_gauge, Geometry, GeometrySpec, LorentzFamily, Profile, SurfaceKind, SurfaceMetric};
use cartan_core::lie::{jacobi_defect, named_constants, recognize, registry, NamedChart};
use cartan_core::lie::{affine_surface_coframe, StructureConstants};
use cartan_core::lie_equation::{fmt_f64, read_numeric_csv};
use cartan_core::spline::CubicSpline;
use cartan_core::transport::{develop, holonomy, roll, ChartCurve};
use cartan_core::Coords;

use crate::job::{header, join, JobSpec};
use crate::{invalid, numeric, CliError};

/// What a job produced: result metadata, the CSV body, and console lines.
pub struct Produced {
    pub results: Vec<(String, String)>,
    pub body: Vec<u8>,
    pub console: Vec<String>,
}

impl Produced {
    fn new() -> Self {
        Produced { results: Vec::new(), body: Vec::new(), console: Vec::new() }
    }

    /// Records a result both in the metadata and on the console.
    fn result(&mut self, key: &str, value: String) {
        self.console.push(format!("{key} = {value}"));
        self.results.push((key.to_string(), value));
    }

    fn number(&mut self, key: &str, v: f64) {
        self.result(key, fmt_f64(v));
    }
}

pub fn execute(job: &JobSpec, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    if job.sweep.is_some() {
        return sweep(job, out, stdout);
    }
    let produced = produce(job)?;
    emit(job, &produced, out, stdout)
}

fn emit(job: &JobSpec, p: &Produced, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut bytes = header(job, &p.results).into_bytes();
    bytes.extend_from_slice(&p.body);
    let io = |e: std::io::Error| CliError::Invalid(format!("cannot write output: {e}"));
    match out {
        Some(path) => {
            write_file(path, &bytes)?;
            for line in &p.console {
                writeln!(stdout, "{line}").map_err(io)?;
            }
        }
        None => stdout.write_all(&bytes).map_err(io)?,
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Invalid(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}

fn produce(job: &JobSpec) -> Result<Produced, CliError> {
    match job.command.as_str() {
        "algebras" => algebras(job),
        "develop" => develop_cmd(job),
        "holonomy" => holonomy_cmd(job),
        "roll" => roll_cmd(job),
        "spiral" => spiral(job),
        "geodesic" => geodesic(job),
        "lorentz" => lorentz(job),
        "flow" => flow(job),
        "frenet" => frenet(job),
        "curvature" => curvature(job),
        "mc-check" => mc_check(job),
        "recognize" => recognize_cmd(job),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn required<'a, T>(v: &'a Option<T>, flag: &str, command: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("`{command}` needs --{flag}")))
}

fn geometry(job: &JobSpec) -> Result<Geometry, CliError> {
    required(&job.geometry, "geometry", &job.command)?.build().map_err(invalid)
}

fn gauge_of(geom: Geometry, spec: &GeometrySpec, h_fd: f64) -> Result<CartanGauge, CliError> {
    let gauge = match geom {
        Geometry::Surface(m) => surface_gauge(&m).map_err(invalid)?,
        Geometry::Gauge(g) => g,
        Geometry::Lorentz(_) => {
            return Err(CliError::Invalid(format!("`{}` is a Lorentz metric; use the `lorentz` command", spec.name)))
        }
    };
    Ok(gauge.with_finite_differences(h_fd))
}

fn gauge(job: &JobSpec) -> Result<CartanGauge, CliError> {
    gauge_of(geometry(job)?, job.geometry.as_ref().expect("checked"), job.h_fd)
}

fn surface_of(geom: Geometry, name: &str, flag: &str) -> Result<SurfaceMetric, CliError> {
    match geom {
        Geometry::Surface(m) => Ok(m),
        _ => Err(CliError::Invalid(format!("--{flag} `{name}` is not a surface"))),
    }
}

/// Start point of a chart flow, checked against the chart domain.
fn chart_start(job: &JobSpec, gauge: &CartanGauge) -> Result<Vec<f64>, CliError> {
    let x = required(&job.start, "start", &job.command)?.clone();
    if x.len() != gauge.chart_dim() {
        return Err(CliError::Usage(format!("--start needs {} coordinates, got {}", gauge.chart_dim(), x.len())));
    }
    if !(gauge.boundary_distance(&x) > 0.0) {
        return Err(CliError::Invalid(format!("--start {} lies outside the chart domain", join(&x))));
    }
    let report = gauge.validate(&x).map_err(invalid)?;
    if !report.invertible {
        return Err(CliError::Invalid(format!("soldering form is singular at --start (condition {:.3e})", report.condition)));
    }
    Ok(x)
}

fn parse_curve(spec: &str, flag: &str) -> Result<ChartCurve, CliError> {
    ChartCurve::parse(spec).map_err(|e| CliError::Invalid(format!("--{flag}: {e}")))
}

fn algebras(job: &JobSpec) -> Result<Produced, CliError> {
    let mut p = Produced::new();
    match job.args.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["list"] => {
            writeln!(p.body, "name,dim,matrix_size,jacobi_defect").expect("vec write");
            for name in registry::NAMES {
                let alg = registry::algebra(name).map_err(numeric)?;
                let d = jacobi_defect(&alg.structure_constants().map_err(numeric)?);
                writeln!(p.body, "{name},{},{},{}", alg.dim(), alg.matrix_size(), fmt_f64(d)).expect("vec write");
                p.console.push(format!("{name}: dim {} jacobi_defect = {d:e}", alg.dim()));
            }
        }
        ["check", name] => {
            let c = named_constants(name).map_err(invalid)?;
            let d = jacobi_defect(&c);
            write_constants(&mut p.body, &[("c", &c)]);
            p.results.push(("jacobi_defect".into(), fmt_f64(d)));
            p.console.push(format!("{name}: jacobi_defect = {d:e}"));
        }
        _ => return Err(CliError::Usage("usage: `algebras list` or `algebras check NAME`".into())),
    }
    Ok(p)
}

fn write_constants(body: &mut Vec<u8>, columns: &[(&str, &StructureConstants)]) {
    let n = columns[0].1.dim();
    let names: Vec<&str> = columns.iter().map(|c| c.0).collect();
    writeln!(body, "k,i,j,{}", names.join(",")).expect("vec write");
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let vals: Vec<String> = columns.iter().map(|(_, c)| fmt_f64(c.get(k, i, j))).collect();
                writeln!(body, "{k},{i},{j},{}", vals.join(",")).expect("vec write");
            }
        }
    }
}

fn develop_cmd(job: &JobSpec) -> Result<Produced, CliError> {
    let g = gauge(job)?;
    let curve = parse_curve(required(&job.curve, "curve", "develop")?, "curve")?;
    let tr = develop(&g, &curve, job.method, job.h).map_err(numeric)?;
    let mut p = Produced::new();
    p.number("max_defect", tr.max_defect());
    tr.write_csv(&mut p.body).map_err(numeric)?;
    Ok(p)
}

fn holonomy_cmd(job: &JobSpec) -> Result<Produced, CliError> {
    let g = gauge(job)?;
    let lp = parse_curve(required(&job.loop_spec, "loop", "holonomy")?, "loop")?;
    let res = holonomy(&g, &lp, job.method, job.h).map_err(numeric)?;
    let mut p = Produced::new();
    if let Some(a) = res.rotation_angle {
        p.number("rotation_angle", a);
    }
    if let Some(w) = res.winding {
        p.number("winding", w);
    }
    p.number("translation_defect", res.translation_defect);
    let entries: Vec<String> = res.element.transpose().iter().map(|v| fmt_f64(*v)).collect();
    p.results.push(("element".into(), entries.join(" ")));
    res.trajectory.write_csv(&mut p.body).map_err(numeric)?;
    Ok(p)
}

fn roll_cmd(job: &JobSpec) -> Result<Produced, CliError> {
    let spec_a = required(&job.geometry, "geometry", "roll")?;
    let spec_b = required(&job.target, "target", "roll")?;
    let ma = surface_of(spec_a.build().map_err(invalid)?, &spec_a.name, "geometry")?;
    let mb = surface_of(spec_b.build().map_err(invalid)?, &spec_b.name, "target")?;
    let curve = parse_curve(required(&job.curve, "curve", "roll")?, "curve")?;
    let start = required(&job.start, "start", "roll")?;
    if start.len() != 2 || !(mb.boundary_distance(start) > 0.0) {
        return Err(CliError::Invalid(format!("--start {} is not a point of `{}`", join(start), spec_b.name)));
    }
    let res = roll(&ma, &mb, &curve, start, job.angle.unwrap_or(0.0), job.h).map_err(numeric)?;
    let mut p = Produced::new();
    p.result("stopped", res.stopped.as_ref().map_or("none".to_string(), |e| e.to_string()));
    writeln!(p.body, "t,b0,b1,rotation").expect("vec write");
    for ((t, b), r) in res.times.iter().zip(&res.trace).zip(&res.rotation) {
        writeln!(p.body, "{},{},{},{}", fmt_f64(*t), fmt_f64(b[0]), fmt_f64(b[1]), fmt_f64(*r)).expect("vec write");
    }
    Ok(p)
}

fn options(job: &JobSpec) -> FlowOptions {
    FlowOptions::new(job.tmax, job.h).with_stride(job.stride)
}

fn report_results(p: &mut Produced, rep: &ProbeReport) {
    p.result("outcome", rep.outcome.label().to_string());
    p.number("t_end", rep.t_end);
    p.number("max_drift", rep.max_drift);
    if let flows::Outcome::Escaped { norm, .. } = rep.outcome {
        p.number("escape_norm", norm);
    }
}

fn flow_produced(res: (Trajectory, ProbeReport)) -> Result<Produced, CliError> {
    let (tr, rep) = res;
    let mut p = Produced::new();
    report_results(&mut p, &rep);
    tr.write_csv(&mut p.body).map_err(numeric)?;
    Ok(p)
}

fn profile_of(job: &JobSpec) -> Result<Profile, CliError> {
    let spec = required(&job.geometry, "geometry", &job.command)?;
    match spec.build().map_err(invalid)? {
        Geometry::Surface(m) => match m.kind() {
            SurfaceKind::Revolution(profile) => Ok(profile.clone()),
            _ => Err(CliError::Invalid(format!("`spiral` needs a `revolution` geometry, got `{}`", spec.name))),
        },
        _ => Err(CliError::Invalid(format!("`spiral` needs a `revolution` geometry, got `{}`", spec.name))),
    }
}

/// `--A c0` or `--A c0,1,0`: spirals use the `a₀ = 1, b₀ = 0` normalization.
fn spiral_c0(a: &[f64]) -> Result<f64, CliError> {
    match a {
        [c0] => Ok(*c0),
        [c0, a0, b0] if *a0 == 1.0 && *b0 == 0.0 => Ok(*c0),
        _ => Err(CliError::Usage(format!(
            "--A for `spiral` is `c0` or `c0,1,0` (unit speed along e1); got `{}`",
            join(a)
        ))),
    }
}

fn spiral(job: &JobSpec) -> Result<Produced, CliError> {
    let profile = profile_of(job)?;
    let c0 = spiral_c0(required(&job.a, "A", "spiral")?)?;
    let s = required(&job.start, "start", "spiral")?;
    let start: [f64; 3] = s
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage(format!("--start for `spiral` is z,theta,phi; got `{}`", join(s))))?;
    let (lo, hi) = profile.domain();
    if !(start[0] > lo && start[0] < hi) {
        return Err(CliError::Invalid(format!("--start z = {} is outside the profile domain [{lo}, {hi}]", start[0])));
    }
    flow_produced(flows::revolution_spiral(&profile, c0, start, &options(job)).map_err(numeric)?)
}

fn geodesic(job: &JobSpec) -> Result<Produced, CliError> {
    let g = gauge(job)?;
    if !g.model().is_surface() {
        return Err(CliError::Invalid("`geodesic` needs a Riemannian surface".into()));
    }
    let x = chart_start(job, &g)?;
    flow_produced(flows::geodesic_flow(&g, &x, job.angle.unwrap_or(0.0), &options(job)).map_err(numeric)?)
}

fn lorentz(job: &JobSpec) -> Result<Produced, CliError> {
    let spec = required(&job.geometry, "geometry", "lorentz")?;
    let fam: LorentzFamily = match spec.build().map_err(invalid)? {
        Geometry::Lorentz(f) => f,
        _ => return Err(CliError::Invalid(format!("`{}` is not a Lorentz geometry", spec.name))),
    };
    let s = required(&job.start, "start", "lorentz")?;
    let start: [f64; 4] = s
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage(format!("--start for `lorentz` is x,y,xdot,ydot; got `{}`", join(s))))?;
    if !(fam.boundary_distance(&start) > 0.0) {
        return Err(CliError::Invalid(format!("--start {} lies outside the domain of `{}`", join(s), spec.name)));
    }
    flow_produced(flows::lorentz_geodesic(&fam, start, &options(job)).map_err(numeric)?)
}

fn flow(job: &JobSpec) -> Result<Produced, CliError> {
    let g = gauge(job)?;
    let x = chart_start(job, &g)?;
    let a = required(&job.a, "A", "flow")?;
    let n = g.algebra().dim();
    if a.len() != n {
        return Err(CliError::Usage(format!("--A needs {n} coordinates for `{}`, got {}", g.algebra().name(), a.len())));
    }
    let nf = g.model().h_indices().len();
    let fiber = job.fiber.clone().unwrap_or_else(|| vec![0.0; nf]);
    if fiber.len() != nf {
        return Err(CliError::Usage(format!("--fiber needs {nf} coordinates, got {}", fiber.len())));
    }
    let start = FlowState::new(x, fiber);
    flow_produced(flows::constant_flow(&g, &Coords::from_column_slice(a), &start, &options(job)).map_err(numeric)?)
}

/// Coefficient list, or a CSV of `(s, value)` samples.
fn scalar_fn(v: &str, flag: &str) -> Result<ScalarFn, CliError> {
    if let Some(c) = parse_list(v) {
        return Ok(ScalarFn::Polynomial(c));
    }
    let file = std::fs::File::open(v).map_err(|e| CliError::Invalid(format!("--{flag}: {v}: {e}")))?;
    let rows = read_numeric_csv(file).map_err(|e| CliError::Invalid(format!("--{flag}: {v}: {e}")))?;
    if rows.iter().any(|r| r.len() != 2) {
        return Err(CliError::Invalid(format!("--{flag}: {v}: rows must be `s, value`")));
    }
    let (s, y) = rows.iter().map(|r| (r[0], r[1])).unzip();
    Ok(ScalarFn::Tabulated(CubicSpline::new(s, y).map_err(|e| CliError::Invalid(format!("--{flag}: {e}")))?))
}

fn frenet(job: &JobSpec) -> Result<Produced, CliError> {
    let k = scalar_fn(required(&job.kappa, "kappa", "frenet")?, "kappa")?;
    let t = scalar_fn(job.tau.as_deref().unwrap_or("0"), "tau")?;
    let range = required(&job.arclength, "arclength", "frenet")?;
    let [s0, s1] = range.as_slice() else {
        return Err(CliError::Usage(format!("--arclength is s0,s1; got `{}`", join(range))));
    };
    let curve = frenet_reconstruct(&FrenetData::new(k, t, *s0, *s1), job.h).map_err(numeric)?;
    let mut p = Produced::new();
    p.number("frame_defect", curve.frame_defect());
    let end: &Vector3<f64> = curve.x.last().expect("curve has samples");
    p.result("endpoint", end.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" "));
    curve.write_csv(&mut p.body).map_err(numeric)?;
    Ok(p)
}

fn curvature(job: &JobSpec) -> Result<Produced, CliError> {
    let geom = geometry(job)?;
    let metric = match &geom {
        Geometry::Surface(m) => Some(m.clone()),
        _ => None,
    };
    let g = gauge_of(geom, job.geometry.as_ref().expect("checked"), job.h_fd)?;
    let x = chart_start(job, &g)?;
    let k = g.curvature(&x).map_err(numeric)?;
    let mut p = Produced::new();
    if let Some(s) = k.scalar_k {
        p.number("scalar_k", s);
    }
    if let Some(m) = metric {
        p.number("gauss_curvature", gauss_curvature(&m, &x).map_err(numeric)?);
    }
    p.number("max_abs", k.max_abs());
    writeln!(p.body, "m,a,b,k").expect("vec write");
    let d = g.model().solder_indices().len();
    for m in 0..g.algebra().dim() {
        for a in 0..d {
            for b in (a + 1)..d {
                writeln!(p.body, "{m},{a},{b},{}", fmt_f64(k.get(m, a, b))).expect("vec write");
            }
        }
    }
    Ok(p)
}

fn mc_check(job: &JobSpec) -> Result<Produced, CliError> {
    let [name] = job.args.as_slice() else {
        return Err(CliError::Usage("usage: `mc-check NAME --start …`".into()));
    };
    let alg = registry::algebra(name).map_err(invalid)?;
    let chart = NamedChart::for_algebra(name);
    let point = required(&job.start, "start", "mc-check")?;
    let d = chart.defect(&alg, point, job.h_fd).map_err(numeric)?;
    let mut p = Produced::new();
    p.result("chart", chart.label().to_string());
    p.number("defect", d);
    writeln!(p.body, "algebra,chart,defect\n{name},{},{}", chart.label(), fmt_f64(d)).expect("vec write");
    Ok(p)
}

fn parse_matrix(v: &str, n: usize) -> Result<DMatrix<f64>, CliError> {
    let rows: Option<Vec<Vec<f64>>> = v.split(';').map(parse_list).collect();
    match rows {
        Some(rows) if rows.len() == n && rows.iter().all(|r| r.len() == n) => {
            Ok(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
        }
        _ => Err(CliError::Usage(format!("--coframe needs {n} `;`-separated rows of {n} numbers, got `{v}`"))),
    }
}

fn recognize_cmd(job: &JobSpec) -> Result<Produced, CliError> {
    let [source, target] = job.args.as_slice() else {
        return Err(CliError::Usage("usage: `recognize SOURCE TARGET [--coframe rows]`".into()));
    };
    let c = named_constants(source).map_err(invalid)?;
    let t = named_constants(target).map_err(invalid)?;
    let q = match &job.coframe {
        Some(v) => parse_matrix(v, c.dim())?,
        None if source == "affine_surface" => affine_surface_coframe(),
        None => DMatrix::identity(c.dim(), c.dim()),
    };
    let r = recognize(&c, &q, &t).map_err(numeric)?;
    let mut p = Produced::new();
    let rows: Vec<String> = q.row_iter().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")).collect();
    p.results.push(("coframe_used".into(), rows.join(";")));
    p.number("source_jacobi_defect", jacobi_defect(&c));
    p.number("max_error", r.max_error);
    write_constants(&mut p.body, &[("transformed", &r.transformed), ("target", &r.target)]);
    Ok(p)
}

/// Columns of a sweep file for each command.
fn sweep_columns(command: &str) -> Result<&'static [&'static str], CliError> {
    match command {
        "spiral" => Ok(&["c0", "z", "theta", "phi"]),
        "lorentz" => Ok(&["x", "y", "xdot", "ydot"]),
        other => Err(CliError::Usage(format!("--sweep is not available for `{other}`"))),
    }
}

/// Runs every row of the sweep file as its own job, in parallel, then
/// writes `summary.csv` once all jobs are done.
fn sweep(job: &JobSpec, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cols = sweep_columns(&job.command)?;
    let dir = out.ok_or_else(|| CliError::Usage("--sweep needs --out DIRECTORY".into()))?;
    let path = job.sweep.as_ref().expect("sweep set");
    let file = std::fs::File::open(path).map_err(|e| CliError::Invalid(format!("--sweep: {}: {e}", path.display())))?;
    let rows = read_numeric_csv(file).map_err(|e| CliError::Invalid(format!("--sweep: {}: {e}", path.display())))?;
    if let Some(i) = rows.iter().position(|r| r.len() != cols.len()) {
        return Err(CliError::Invalid(format!(
            "--sweep: {}: row {} needs columns {}",
            path.display(),
            i + 1,
            cols.join(",")
        )));
    }
    let jobs: Vec<JobSpec> = rows
        .iter()
        .map(|r| {
            let mut j = job.clone();
            j.sweep = None;
            match job.command.as_str() {
                "spiral" => {
                    j.a = Some(vec![r[0]]);
                    j.start = Some(r[1..].to_vec());
                }
                _ => j.start = Some(r.clone()),
            }
            j
        })
        .collect();
    // Validate the shared inputs once before launching anything.
    match job.command.as_str() {
        "spiral" => drop(profile_of(job)?),
        _ => drop(geometry(job)?),
    }
    let outcomes: Vec<Result<Produced, CliError>> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, j)| {
            let p = produce(j)?;
            let mut bytes = header(j, &p.results).into_bytes();
            bytes.extend_from_slice(&p.body);
            write_file(&dir.join(format!("job_{i:04}.csv")), &bytes)?;
            Ok(p)
        })
        .collect();
    let mut summary = format!("job,file,{},outcome,t_end,max_drift,error\n", cols.join(","));
    let mut worst: Option<CliError> = None;
    for (i, (row, res)) in rows.iter().zip(&outcomes).enumerate() {
        let params: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let get = |p: &Produced, k: &str| {
            p.results.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone()).unwrap_or_default()
        };
        let (outcome, t_end, drift, error) = match res {
            Ok(p) => (get(p, "outcome"), get(p, "t_end"), get(p, "max_drift"), String::new()),
            Err(e) => {
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e.clone());
                }
                ("failed".into(), String::new(), String::new(), e.message().replace(',', ";"))
            }
        };
        summary.push_str(&format!("{i},job_{i:04}.csv,{},{outcome},{t_end},{drift},{error}\n", params.join(",")));
    }
    let mut bytes = header(job, &[("jobs".into(), rows.len().to_string())]).into_bytes();
    bytes.extend_from_slice(summary.as_bytes());
    write_file(&dir.join("summary.csv"), &bytes)?;
    let failed = outcomes.iter().filter(|r| r.is_err()).count();
    writeln!(stdout, "jobs = {}\nfailed = {failed}", rows.len())
        .map_err(|e| CliError::Invalid(format!("cannot write output: {e}")))?;
    match worst {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
