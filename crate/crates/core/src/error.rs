use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("quadrature tolerance not reached: {0}")]
    Tolerance(String),

    #[error("numerical consistency check failed: {0}")]
    Consistency(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
