use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bracket does not close on the basis (projection residual {residual:.3e})")]
    BasisClosure { residual: f64 },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("step too large: exponential argument norm {norm:.3e} at t = {t}")]
    StepTooLarge { norm: f64, t: f64 },

    #[error("outside chart domain: {0}")]
    Domain(String),

    #[error("soldering matrix is singular (condition number {condition:.3e})")]
    SolderingSingular { condition: f64 },

    #[error("invalid mutation: {0}")]
    MutationInvalid(String),

    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),

    #[error("unknown algebra `{0}`")]
    UnknownAlgebra(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("loop is not closed (endpoint gap {gap:.3e})")]
    LoopNotClosed { gap: f64 },

    #[error("curvature {k:.3e} below the Frenet floor at s = {s}")]
    CurvatureTooSmall { s: f64, k: f64 },

    #[error("degenerate curve at sample {index}: torsion undefined where curvature vanishes")]
    DegenerateCurve { index: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
