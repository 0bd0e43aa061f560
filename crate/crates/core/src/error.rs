use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid ellipsoid: {0}")]
    InvalidEllipsoid(String),

    #[error("direction must be nonzero")]
    InvalidDirection,

    #[error("affine map has a singular linear part")]
    SingularMap,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("body is empty")]
    EmptyBody,

    #[error("slab is empty along the cut direction")]
    EmptySlab,

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("solver did not converge within {iterations} iterations (gap {gap:e})")]
    Unconverged { iterations: usize, gap: f64 },

    #[error("ellipsoid is not optimal: {0}")]
    NotOptimal(String),

    #[error("quadratic is negative on the interval (minimum {0:e})")]
    NotNonnegative(f64),

    #[error("invariant shape is singular: orbit does not span the space")]
    SingularShape,

    #[error("element set is not a group: {0}")]
    NotAGroup(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
