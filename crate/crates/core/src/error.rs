use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmcfError {
    #[error("non-finite or out-of-domain numerical input: {0}")]
    NumericalDomain(String),

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("outside domain: {0}")]
    OutsideDomain(String),

    #[error("empty level set: {0}")]
    EmptyLevel(String),

    #[error("point ({x}, {y}) lies outside the moment polygon")]
    OutsidePolygon { x: f64, y: f64 },

    #[error("corrupt point: {0}")]
    CorruptPoint(String),

    #[error("ambiguous stratum: distance {distance:e} to {stratum} is between tolerances")]
    BoundaryAmbiguity { stratum: String, distance: f64 },

    #[error("point is outside chart U_{k0}: {reason}")]
    OutsideChart { k0: usize, reason: String },

    #[error("trajectory hit a fixed point of the action at t = {t}")]
    FixedPointHit { t: f64 },

    #[error("projection failed to converge after {iterations} iterations (residual {residual:e})")]
    ProjectionFailure { iterations: usize, residual: f64 },

    #[error("level c = {c} passes through a torus-fixed point")]
    OnFixedLevel { c: f64 },

    #[error("no samples inside the rescaled window")]
    EmptyWindow,

    #[error("vector is not tangent to the level set (residual {0:e})")]
    NotTangent(f64),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LmcfError>;

impl From<std::io::Error> for LmcfError {
    fn from(e: std::io::Error) -> Self {
        LmcfError::Io(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(LmcfError::Dimension { expected, got });
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, xs: &[f64]) -> Result<()> {
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(LmcfError::NumericalDomain(format!(
            "{what}[{i}] = {}",
            xs[i]
        )));
    }
    Ok(())
}
