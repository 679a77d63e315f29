use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate {value}, achieved error {achieved:e}, requested {requested:e}")]
    NoConvergence {
        value: f64,
        achieved: f64,
        requested: f64,
    },
    #[error("non-finite integrand on [{a}, {b}]")]
    NonFinite { a: f64, b: f64 },
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mollification width {sigma} is below 2h = {min}")]
    KernelUnderResolved { sigma: f64, min: f64 },
    #[error("function is not in Conv0+: {0}")]
    NotInConv0Plus(String),
    #[error("Hessian undefined on positive-measure subset: {bad} of {total} cells have negative second differences")]
    HessianUndefined { bad: usize, total: usize },
    #[error("t = {t} is below the first positive sample {first}")]
    TooSmall { t: f64, first: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
