use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported degree {degree}: {reason}")]
    UnsupportedDegree { degree: usize, reason: &'static str },

    #[error("polynomial is constant; it has no roots")]
    DegeneratePolynomial,

    #[error("pole {pole} hits the spectrum: shifted system is singular")]
    PoleCollision { pole: Complex64 },

    #[error("seed vector has zero norm")]
    ZeroSeed,

    #[error("seed vector does not match the space (deviation {deviation:e})")]
    SeedMismatch { deviation: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("projected matrix is numerically non-diagonalizable (eigenvector condition {cond:e}); add poles")]
    NotDiagonalizable { cond: f64 },

    #[error("no pole count up to {max} reaches tolerance {tol:e}")]
    Saturated { max: usize, tol: f64 },

    #[error("order {order} exceeds the scale guard {limit}")]
    ScaleGuard { order: usize, limit: usize },

    #[error("non-finite state at step {step}")]
    BlowUp { step: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => "invalid-input",
            Error::UnsupportedDegree { .. } | Error::DegeneratePolynomial => "unsupported",
            Error::PoleCollision { .. } => "pole-collision",
            Error::ZeroSeed | Error::SeedMismatch { .. } => "invalid-seed",
            Error::Eigen(_) | Error::NotDiagonalizable { .. } => "eigensolver",
            Error::Saturated { .. } => "saturation",
            Error::ScaleGuard { .. } => "scale-guard",
            Error::BlowUp { .. } => "blow-up",
            Error::NotPositiveDefinite { .. } => "not-spd",
            Error::Mesh(_) => "mesh",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
