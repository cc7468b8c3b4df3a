use thiserror::Error;

/// Errors raised by the geometry, measure and field routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: need d >= 2")]
    InvalidDimension(usize),
    #[error("parameter {name} = {value} outside permitted range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("curves coincide within tolerance")]
    DegeneratePair,
    #[error("no admissible tangent curve: t = {0} lies outside [-1, 1]")]
    NoAdmissibleTangent(f64),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("invalid delta {0}")]
    InvalidDelta(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("grid spacing {spacing} too coarse for delta {delta} (need spacing <= delta/2)")]
    Resolution { spacing: f64, delta: f64 },
    #[error("invalid exponent p = {0} (need p >= 1)")]
    InvalidExponent(f64),
    #[error("voxel budget exceeded: {voxels} voxels > budget {budget}")]
    Budget { voxels: u128, budget: u128 },
    #[error("quadrature did not converge: relative change {0:e}")]
    Quadrature(f64),
    #[error("fit domain error: {0}")]
    FitDomain(String),
    #[error("empty set")]
    EmptySet,
    #[error("ladder failed: {failed} of {total} points failed")]
    LadderFailed { failed: usize, total: usize },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
