use thiserror::Error;

/// Errors produced by the measure, metric and convergence routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid point {coords:?}: {reason}")]
    InvalidPoint { coords: Vec<f64>, reason: String },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("invalid weight {0}: weights must be finite and strictly positive")]
    InvalidWeight(f64),

    #[error("not a probability measure: total mass {0}")]
    NotProbability(f64),

    #[error("combined atom count {count} exceeds the cap of {cap}; subsample the measures")]
    SizeCap { count: usize, cap: usize },

    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("materialization failed at level {level}: {reason}")]
    Materialization { level: u32, reason: String },

    #[error("point count mismatch in region: sequence has {sequence}, limit has {limit}")]
    CountMismatch { sequence: usize, limit: usize },

    #[error("limit measure puts mass {0} on the region boundary")]
    BoundaryMass(f64),

    #[error("not a point measure: {0}")]
    NotPointMeasure(String),

    #[error("quadrature did not converge on [{lo}, {hi}] within depth {depth}")]
    Quadrature { lo: f64, hi: f64, depth: u32 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
