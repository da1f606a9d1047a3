//! Command-line driver: argument parsing, job orchestration and CSV output.
//!
//! Exit codes: 0 on success (escapes and step collapses are results), 1 on
//! invalid input, 2 when a computation fails numerically.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cartan_core::geometries::{parse_list, GeometrySpec};
use cartan_core::Error;

mod commands;
pub mod job;

pub use job::JobSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags or flag values.
    Usage(String),
    /// Inputs that parse but do not describe a valid job.
    Invalid(String),
    /// The computation itself failed.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Invalid(m) | CliError::Numeric(m) => m,
        }
    }
}

/// Input-side failure.
pub(crate) fn invalid(e: Error) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Failure while computing; input-shaped errors still count as validation.
pub(crate) fn numeric(e: Error) -> CliError {
    match e {
        Error::BadParams(_)
        | Error::Parse(_)
        | Error::Io(_)
        | Error::UnknownGeometry(_)
        | Error::UnknownAlgebra(_)
        | Error::LoopNotClosed { .. } => CliError::Invalid(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(name = "cartan", version, about = "Cartan geometries on matrix Lie groups")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// `algebras list` or `algebras check NAME`: built-in algebras and their Jacobi defect.
    Algebras(Opts),
    /// Develop a chart curve (--curve) of a gauge (--geometry) into its model group.
    Develop(Opts),
    /// Holonomy of a closed loop (--loop).
    Holonomy(Opts),
    /// Roll --target along --curve drawn on --geometry.
    Roll(Opts),
    /// Spiral on a surface of revolution; --A c0, --start z,theta,phi.
    Spiral(Opts),
    /// Unit-speed geodesic from --start at frame angle --angle.
    Geodesic(Opts),
    /// Lorentz geodesic; --start x,y,xdot,ydot.
    Lorentz(Opts),
    /// Constant vector field --A from --start (and --fiber).
    Flow(Opts),
    /// Space curve from curvature --kappa and torsion --tau over --arclength s0,s1.
    Frenet(Opts),
    /// Curvature of the gauge at --start.
    Curvature(Opts),
    /// `mc-check NAME`: Maurer–Cartan defect of the algebra's chart at --start.
    McCheck(Opts),
    /// `recognize SOURCE TARGET`: rewrite SOURCE constants in --coframe and compare with TARGET.
    Recognize(Opts),
    /// `rerun FILE`: repeat the job recorded in FILE's metadata.
    Rerun(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// Positional arguments of the subcommand.
    args: Vec<String>,
    /// Builtin geometry name, or a file of `name = …` / `param.key = value` lines.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    param: Vec<String>,
    /// Second geometry (rolling).
    #[arg(long)]
    target: Option<String>,
    #[arg(long = "target-param", value_name = "KEY=VALUE")]
    target_param: Vec<String>,
    /// segment:…, circle:cx,cy,r, latitude:v, polygon:…, or a CSV of t,x1,x2.
    #[arg(long)]
    curve: Option<String>,
    #[arg(long = "loop")]
    loop_spec: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    fiber: Option<String>,
    #[arg(long = "A", allow_hyphen_values = true, value_name = "C0,A0,B0")]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    angle: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    arclength: Option<String>,
    /// Rows of the coframe substitution, `;`-separated.
    #[arg(long, allow_hyphen_values = true)]
    coframe: Option<String>,
    /// lie_euler or rkmk4.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long = "h-fd")]
    h_fd: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    /// Keep every n-th step of long flows.
    #[arg(long)]
    stride: Option<String>,
    /// Output file (a directory for sweeps); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sweep: Option<PathBuf>,
}

/// Flags each subcommand accepts besides --out.
fn accepted(command: &str) -> &'static [&'static str] {
    match command {
        "algebras" => &[],
        "develop" => &["geometry", "param", "curve", "method", "h", "h-fd"],
        "holonomy" => &["geometry", "param", "loop", "method", "h", "h-fd"],
        "roll" => &["geometry", "param", "target", "target-param", "curve", "start", "angle", "h"],
        "spiral" => &["geometry", "param", "A", "start", "h", "tmax", "stride", "sweep"],
        "geodesic" => &["geometry", "param", "start", "angle", "h", "h-fd", "tmax", "stride"],
        "lorentz" => &["geometry", "param", "start", "h", "tmax", "stride", "sweep"],
        "flow" => &["geometry", "param", "A", "start", "fiber", "h", "h-fd", "tmax", "stride"],
        "frenet" => &["kappa", "tau", "arclength", "h"],
        "curvature" => &["geometry", "param", "start", "h-fd"],
        "mc-check" => &["start", "h-fd"],
        "recognize" => &["coframe"],
        _ => &[],
    }
}

fn number(flag: &str, v: &str) -> Result<f64, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--{flag} expects a number, got `{v}`")))
}

fn numbers(flag: &str, v: &str) -> Result<Vec<f64>, CliError> {
    parse_list(v).ok_or_else(|| CliError::Usage(format!("--{flag} expects comma-separated numbers, got `{v}`")))
}

fn apply_params(spec: &mut GeometrySpec, params: &[String], flag: &str) -> Result<(), CliError> {
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--{flag} expects key=value, got `{p}`")))?;
        spec.params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(())
}

/// A builtin name, or a geometry file when the value names one.
fn resolve_geometry(value: &str, params: &[String], flag: &str, param_flag: &str) -> Result<GeometrySpec, CliError> {
    let path = Path::new(value);
    let mut spec = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{value}: {e}")))?;
        GeometrySpec::parse(&text, path.parent()).map_err(|e| CliError::Invalid(format!("{value}: {e}")))?
    } else if value.contains('/') || value.contains('.') {
        return Err(CliError::Invalid(format!("--{flag}: geometry file `{value}` does not exist")));
    } else {
        GeometrySpec::new(value)
    };
    apply_params(&mut spec, params, param_flag)?;
    Ok(spec)
}

fn build_job(command: &str, o: &Opts) -> Result<JobSpec, CliError> {
    let allowed = accepted(command);
    let given: Vec<(&str, bool)> = vec![
        ("geometry", o.geometry.is_some()),
        ("param", !o.param.is_empty()),
        ("target", o.target.is_some()),
        ("target-param", !o.target_param.is_empty()),
        ("curve", o.curve.is_some()),
        ("loop", o.loop_spec.is_some()),
        ("start", o.start.is_some()),
        ("fiber", o.fiber.is_some()),
        ("A", o.a.is_some()),
        ("angle", o.angle.is_some()),
        ("kappa", o.kappa.is_some()),
        ("tau", o.tau.is_some()),
        ("arclength", o.arclength.is_some()),
        ("coframe", o.coframe.is_some()),
        ("method", o.method.is_some()),
        ("h", o.h.is_some()),
        ("h-fd", o.h_fd.is_some()),
        ("tmax", o.tmax.is_some()),
        ("stride", o.stride.is_some()),
        ("sweep", o.sweep.is_some()),
    ];
    if let Some((flag, _)) = given.iter().find(|(f, set)| *set && !allowed.contains(f)) {
        return Err(CliError::Usage(format!("--{flag} is not used by `{command}`")));
    }
    let mut job = JobSpec::new(command);
    job.args = o.args.clone();
    if let Some(g) = &o.geometry {
        job.geometry = Some(resolve_geometry(g, &o.param, "geometry", "param")?);
    } else if !o.param.is_empty() {
        return Err(CliError::Usage("--param needs --geometry".into()));
    }
    if let Some(g) = &o.target {
        job.target = Some(resolve_geometry(g, &o.target_param, "target", "target-param")?);
    } else if !o.target_param.is_empty() {
        return Err(CliError::Usage("--target-param needs --target".into()));
    }
    job.curve = o.curve.clone();
    job.loop_spec = o.loop_spec.clone();
    job.start = o.start.as_deref().map(|v| numbers("start", v)).transpose()?;
    job.fiber = o.fiber.as_deref().map(|v| numbers("fiber", v)).transpose()?;
    job.a = o.a.as_deref().map(|v| numbers("A", v)).transpose()?;
    job.angle = o.angle.as_deref().map(|v| number("angle", v)).transpose()?;
    job.arclength = o.arclength.as_deref().map(|v| numbers("arclength", v)).transpose()?;
    job.kappa = o.kappa.clone();
    job.tau = o.tau.clone();
    job.coframe = o.coframe.clone();
    if let Some(m) = &o.method {
        job.method = m
            .parse()
            .map_err(|_| CliError::Usage(format!("--method expects lie_euler or rkmk4, got `{m}`")))?;
    }
    if let Some(v) = &o.h {
        job.h = number("h", v)?;
    }
    if let Some(v) = &o.h_fd {
        job.h_fd = number("h-fd", v)?;
    }
    if let Some(v) = &o.tmax {
        job.tmax = number("tmax", v)?;
    }
    if let Some(v) = &o.stride {
        job.stride = v
            .parse()
            .map_err(|_| CliError::Usage(format!("--stride expects a positive integer, got `{v}`")))?;
    }
    job.sweep = o.sweep.clone();
    job.check_ranges()?;
    Ok(job)
}

/// Runs the tool with `argv` (program name first), writing to the given streams.
pub fn run_with<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let code = match e.kind() {
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let (name, opts) = match &cli.cmd {
        Cmd::Algebras(o) => ("algebras", o),
        Cmd::Develop(o) => ("develop", o),
        Cmd::Holonomy(o) => ("holonomy", o),
        Cmd::Roll(o) => ("roll", o),
        Cmd::Spiral(o) => ("spiral", o),
        Cmd::Geodesic(o) => ("geodesic", o),
        Cmd::Lorentz(o) => ("lorentz", o),
        Cmd::Flow(o) => ("flow", o),
        Cmd::Frenet(o) => ("frenet", o),
        Cmd::Curvature(o) => ("curvature", o),
        Cmd::McCheck(o) => ("mc-check", o),
        Cmd::Recognize(o) => ("recognize", o),
        Cmd::Rerun(o) => ("rerun", o),
    };
    let result = if name == "rerun" {
        match opts.args.as_slice() {
            [file] => JobSpec::from_metadata(Path::new(file)).and_then(|job| {
                job.check_ranges()?;
                commands::execute(&job, opts.out.as_deref(), stdout)
            }),
            _ => Err(CliError::Usage("`rerun` takes exactly one FILE".into())),
        }
    } else {
        build_job(name, opts).and_then(|job| commands::execute(&job, opts.out.as_deref(), stdout))
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Runs the tool against the process streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
