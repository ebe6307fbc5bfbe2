use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate matrix is not square ({rows} rows, row {row} has {cols} entries)")]
    NonSquare { rows: usize, row: usize, cols: usize },
    #[error("negative transition rate {value} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("time must be strictly positive, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid interval [{t1}, {t2}]")]
    BadInterval { t1: f64, t2: f64 },
    #[error("not a probability vector: {0}")]
    InvalidProbability(String),
    #[error("steady state is not unique (kernel dimension {0})")]
    NonUniqueSteadyState(usize),
    #[error("steady-state solve did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("not a steady state: |W p|_inf = {0:e}")]
    NotSteadyState(f64),
    #[error("adaptive quadrature did not reach tolerance {tol:e} within {levels} levels")]
    QuadratureNoConvergence { tol: f64, levels: u32 },
    #[error("distributions have different outcome sets")]
    KeyMismatch,
    #[error("sample times must be non-decreasing and start at 0")]
    TimesNotSorted,
    #[error("too few samples: {0} (need at least 100)")]
    TooFewSamples(usize),
    #[error("path enumeration would need {0} paths (limit 1e6)")]
    TooManyPaths(u128),
    #[error("integration step {dt} exceeds limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("perturbation strength must be non-zero and finite")]
    ZeroStrength,
}
