use thiserror::Error;

/// Every failure the laboratory can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("weight overflow at node {node} (y = {y})")]
    WeightOverflow { node: usize, y: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular tridiagonal system at row {row}")]
    SingularSystem { row: usize },

    #[error("eigensolver failed to converge for eigenvalue {index}")]
    EigenConvergence { index: usize },

    #[error("fixed-point iteration diverged; sup-norm differences {history:?}")]
    ContractionFailure { history: Vec<f64> },

    #[error("Newton iteration did not converge after {iterations} steps (|G| = {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("splitting left the admissible neighborhood (a = {a}, b = {b})")]
    OutOfNeighborhood { a: f64, b: f64 },

    #[error("scaling function undefined at t = {t}")]
    LambdaUndefined { t: f64 },

    #[error("time {t} is not before the blowup time {t_star}")]
    AfterBlowup { t: f64, t_star: f64 },

    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("initial data rejected: {0}")]
    InitialData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn ensure_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "exponent must exceed 1",
        })
    }
}
