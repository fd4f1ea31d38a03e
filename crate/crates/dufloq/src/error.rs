use thiserror::Error;

/// Errors shared across the library.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("coordinate systems do not match")]
    CoordinateMismatch,

    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),

    #[error("composition of differentials is not zero")]
    CompositionNotZero,

    #[error("dimension cap exceeded: {size} > {cap}")]
    DimensionCap { size: usize, cap: usize },

    #[error("Jacobi identity fails: [Q,Q] != 0")]
    JacobiFailure,

    #[error("Maurer-Cartan equation fails for the twisting element")]
    MCViolation,

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
