use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("parameter error: {0}")]
    Param(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("state error: {0}")]
    State(String),

    #[error("convergence error: {0}")]
    Convergence(String),

    #[error("numerical error: {0}")]
    Numerics(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("size error: {0}")]
    SizeCap(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
