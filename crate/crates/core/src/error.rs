use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input contains a non-finite entry")]
    NonFinite,
    #[error("eigenvalue iteration did not converge")]
    NonConvergence,
    #[error("eigenvector basis is ill-conditioned (reconstruction residual {residual:e})")]
    IllConditioned { residual: f64 },
    #[error("matrix exponential overflowed")]
    Overflow,
    #[error("drift is not stable: smallest real part of the spectrum is {min_real_part}")]
    UnstableDrift { min_real_part: f64 },
    #[error("initial state is zero")]
    ZeroInitialState,
    #[error("matrix has a real spectrum")]
    RealSpectrum,
    #[error("covariance is singular")]
    SingularCovariance,
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("no explicit profile exists for this initial state")]
    NoProfile,
    #[error("moment of order {order} is infinite for this noise (needs order < {limit})")]
    MomentGate { order: f64, limit: f64 },
    #[error("step size {dt} too large for |Q| = {norm}")]
    StepTooLarge { dt: f64, norm: f64 },
    #[error("sample sizes differ ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("{n} atoms exceed the exact-assignment cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("noise does not reach every direction (controllability rank {rank} < {dim})")]
    DegenerateNoise { rank: usize, dim: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
