use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("bessel order {0} outside supported range [0, 64]")]
    OrderOutOfRange(f64),
    #[error("{what} overflows f64 at order {order}, z = {z}; use the scaled variant")]
    Overflow { what: &'static str, order: f64, z: f64 },
    #[error("{what} underflows f64 at order {order}, z = {z}; use the scaled variant")]
    Underflow { what: &'static str, order: f64, z: f64 },
    #[error("invalid weight pair: {0}")]
    InvalidWeight(String),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("tail beyond r_max contributes {estimate:e} relative to the right-hand side in mode {mode}")]
    TailTruncation { mode: i32, estimate: f64 },
    #[error("resonant weight: {0}")]
    ResonantWeight(String),
    #[error("solvability violated in mode {mode}: moment {moment:e} exceeds tolerance {tolerance:e}")]
    SolvabilityViolated { mode: i32, moment: f64, tolerance: f64 },
    #[error("unknown manufactured family `{0}`")]
    UnknownFamily(String),
    #[error("ratio undefined: denominator vanishes")]
    ZeroDenominator,
    #[error("mode {mode}: {source}")]
    InMode { mode: i32, source: Box<Error> },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Strips per-mode wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::InMode { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_mode(self, mode: i32) -> Error {
        match self {
            e @ Error::InMode { .. } => e,
            e => Error::InMode { mode, source: Box::new(e) },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
