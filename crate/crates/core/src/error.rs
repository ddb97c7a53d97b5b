use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon number {n} is out of range for truncation {truncation}")]
    OutOfRange { n: usize, truncation: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrand is not finite at beta = {0}")]
    NonFinite(Complex64),

    #[error("grid captures probability mass {mass:.6}; increase the grid radius")]
    GridMassDeficit { mass: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
