use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("normal is not a unit vector (|nu| = {0})")]
    NonUnitNormal(f64),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("convex envelope grid too coarse: refinement changed values by {0:e}")]
    GridTooCoarse(f64),
    #[error("energy pair failed validation: {0}")]
    InvalidPair(String),
    #[error("unsupported measure representation: {0}")]
    UnsupportedRepresentation(String),
    #[error("integrand has no recession function but the measure has a singular part")]
    MissingRecession,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("exact scalar type cannot integrate non-constant density pieces")]
    Inexact,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
