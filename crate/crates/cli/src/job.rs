//! Resolved job descriptions and their `#` metadata form.

use std::path::{Path, PathBuf};

use cartan_core::geometries::{parse_list, GeometrySpec};
use cartan_core::lie_equation::Method;

use crate::CliError;

pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_TMAX: f64 = 10.0;
pub const DEFAULT_H_FD: f64 = cartan_core::gauge::DEFAULT_H_FD;

pub const CONVENTION: &str = "dω + ½[ω,ω] = 0 with [ω,ω](u,v) = [ω(u),ω(v)] − [ω(v),ω(u)]; \
surface basis (R, e1, e2) with R = E12 − E21, dγ = K σ¹∧σ²; frame angle = atan2(g01, g00)";

/// Everything needed to reproduce one run, minus the output location.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub command: String,
    pub args: Vec<String>,
    pub geometry: Option<GeometrySpec>,
    pub target: Option<GeometrySpec>,
    pub curve: Option<String>,
    pub loop_spec: Option<String>,
    pub start: Option<Vec<f64>>,
    pub fiber: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub angle: Option<f64>,
    pub kappa: Option<String>,
    pub tau: Option<String>,
    pub arclength: Option<Vec<f64>>,
    pub coframe: Option<String>,
    pub method: Method,
    pub h: f64,
    pub h_fd: f64,
    pub tmax: f64,
    pub stride: usize,
    pub sweep: Option<PathBuf>,
}

impl JobSpec {
    pub fn new(command: &str) -> Self {
        JobSpec {
            command: command.to_string(),
            args: Vec::new(),
            geometry: None,
            target: None,
            curve: None,
            loop_spec: None,
            start: None,
            fiber: None,
            a: None,
            angle: None,
            kappa: None,
            tau: None,
            arclength: None,
            coframe: None,
            method: Method::Rkmk4,
            h: DEFAULT_H,
            h_fd: DEFAULT_H_FD,
            tmax: DEFAULT_TMAX,
            stride: 1,
            sweep: None,
        }
    }

    /// Documented numeric ranges.
    pub fn check_ranges(&self) -> Result<(), CliError> {
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(CliError::Usage(format!("--h must lie in (0, 1], got {}", self.h)));
        }
        if !(self.tmax > 0.0 && self.tmax <= 1e9) {
            return Err(CliError::Usage(format!("--tmax must lie in (0, 1e9], got {}", self.tmax)));
        }
        if !(self.h_fd > 0.0 && self.h_fd <= 0.1) {
            return Err(CliError::Usage(format!("--h-fd must lie in (0, 0.1], got {}", self.h_fd)));
        }
        if self.stride == 0 {
            return Err(CliError::Usage("--stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Ordered `key = value` pairs; floats use the shortest round-trip form.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![("command".to_string(), self.command.clone())];
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        if !self.args.is_empty() {
            put("args", self.args.join(" "));
        }
        for (key, g) in [("geometry", &self.geometry), ("target", &self.target)] {
            if let Some(g) = g {
                put(key, g.name.clone());
                for (k, v) in &g.params {
                    put(&format!("{key}.param.{k}"), v.clone());
                }
            }
        }
        if let Some(c) = &self.curve {
            put("curve", c.clone());
        }
        if let Some(l) = &self.loop_spec {
            put("loop", l.clone());
        }
        for (key, v) in [("start", &self.start), ("fiber", &self.fiber), ("A", &self.a), ("arclength", &self.arclength)] {
            if let Some(v) = v {
                put(key, join(v));
            }
        }
        if let Some(a) = self.angle {
            put("angle", a.to_string());
        }
        if let Some(k) = &self.kappa {
            put("kappa", k.clone());
        }
        if let Some(t) = &self.tau {
            put("tau", t.clone());
        }
        if let Some(c) = &self.coframe {
            put("coframe", c.clone());
        }
        put("method", self.method.to_string());
        put("h", self.h.to_string());
        put("h_fd", self.h_fd.to_string());
        put("tmax", self.tmax.to_string());
        put("stride", self.stride.to_string());
        if let Some(s) = &self.sweep {
            put("sweep", s.display().to_string());
        }
        out
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, CliError> {
        let bad = |k: &str, v: &str| CliError::Invalid(format!("metadata `job.{k}` has a bad value `{v}`"));
        let num = |k: &str, v: &str| v.parse::<f64>().map_err(|_| bad(k, v));
        let list = |k: &str, v: &str| parse_list(v).ok_or_else(|| bad(k, v));
        let command = pairs
            .iter()
            .find(|(k, _)| k == "command")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| CliError::Invalid("metadata has no `job.command`".into()))?;
        let mut job = JobSpec::new(&command);
        for (k, v) in pairs {
            match k.as_str() {
                "command" => {}
                "args" => job.args = v.split_whitespace().map(String::from).collect(),
                "geometry" => job.geometry = Some(GeometrySpec::new(v)),
                "target" => job.target = Some(GeometrySpec::new(v)),
                "curve" => job.curve = Some(v.clone()),
                "loop" => job.loop_spec = Some(v.clone()),
                "start" => job.start = Some(list(k, v)?),
                "fiber" => job.fiber = Some(list(k, v)?),
                "A" => job.a = Some(list(k, v)?),
                "arclength" => job.arclength = Some(list(k, v)?),
                "angle" => job.angle = Some(num(k, v)?),
                "kappa" => job.kappa = Some(v.clone()),
                "tau" => job.tau = Some(v.clone()),
                "coframe" => job.coframe = Some(v.clone()),
                "method" => job.method = v.parse().map_err(|_| bad(k, v))?,
                "h" => job.h = num(k, v)?,
                "h_fd" => job.h_fd = num(k, v)?,
                "tmax" => job.tmax = num(k, v)?,
                "stride" => job.stride = v.parse().map_err(|_| bad(k, v))?,
                "sweep" => job.sweep = Some(PathBuf::from(v)),
                other => {
                    let (slot, param) = if let Some(p) = other.strip_prefix("geometry.param.") {
                        (&mut job.geometry, p)
                    } else if let Some(p) = other.strip_prefix("target.param.") {
                        (&mut job.target, p)
                    } else {
                        return Err(CliError::Invalid(format!("unknown metadata key `job.{other}`")));
                    };
                    let g = slot
                        .as_mut()
                        .ok_or_else(|| CliError::Invalid(format!("`job.{other}` appears before its geometry name")))?;
                    g.params.insert(param.to_string(), v.clone());
                }
            }
        }
        Ok(job)
    }

    /// Reads the `# job.` lines of an output file.
    pub fn from_metadata(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let pairs: Vec<(String, String)> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.strip_prefix("# job."))
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self::from_pairs(&pairs)
    }
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Metadata header: tool version, convention, seedless marker, job, results.
pub fn header(job: &JobSpec, results: &[(String, String)]) -> String {
    let mut s = format!("# cartan {}\n# convention: {CONVENTION}\n# run.seedless = true\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in job.to_pairs() {
        s.push_str(&format!("# job.{k} = {v}\n"));
    }
    for (k, v) in results {
        s.push_str(&format!("# result.{k} = {v}\n"));
    }
    s
}
