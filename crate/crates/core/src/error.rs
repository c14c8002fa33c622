use thiserror::Error;

/// Errors raised by the simulation and analysis primitives.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("probability {value} is outside [0, 1] for {name}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{name} must be positive")]
    ZeroCount { name: &'static str },
    #[error("basis list must not be empty")]
    EmptyBases,
    #[error("expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("state vector oracle supports at most {max} qubits, got {actual}")]
    TooManyQubits { max: usize, actual: usize },
    #[error("grids must share the same bin count: {left} vs {right}")]
    GridSizeMismatch { left: usize, right: usize },
    #[error("no grids supplied to convolve")]
    EmptyConvolution,
    #[error("rescale factor q must be at least 1")]
    ZeroRescale,
    #[error("grid must be normalized")]
    UnnormalizedGrid,
    #[error("count list must not be empty")]
    EmptyCounts,
    #[error("geometric distribution requires d > 0")]
    ZeroDetectionRate,
    #[error("geometric pmf with support starting at 1 requires n >= 1")]
    GeometricSupport,
    #[error("subset size m={m} is out of range for {n_bobs} nodes")]
    SubsetSizeOutOfRange { m: usize, n_bobs: usize },
    #[error("Fisher information is zero; the estimation variance is unbounded")]
    ZeroInformation,
    #[error("no executions supplied")]
    EmptyExecutions,
    #[error("lambda curve must start at 1 and stay within [0, 2]")]
    InvalidLambdaCurve,
}

pub type Result<T> = std::result::Result<T, Error>;
