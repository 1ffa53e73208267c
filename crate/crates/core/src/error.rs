use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("rank deficiency: {0}")]
    RankDeficiency(String),
    #[error("basis columns are not orthonormal (drift {0:.3e})")]
    Orthonormality(f64),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid sketch configuration: {0}")]
    InvalidSketch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
