use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "eigensolver did not converge for matrix `{name}` (dim {dim}) within {budget} iterations"
    )]
    NoConvergence {
        name: String,
        dim: usize,
        budget: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} = {value} outside supported range {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: &'static str,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix `{name}` is indefinite: smallest eigenvalue {min:e} below floor {floor:e}")]
    Indefinite { name: String, min: f64, floor: f64 },
    #[error("size budget exceeded: {0}")]
    Budget(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
