use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported modulation order {0} (expected 4, 16 or 64)")]
    UnsupportedModulation(usize),
    #[error("bit vector length {len} is not a multiple of {group}")]
    BitLength { len: usize, group: usize },
    #[error("value {0} is not a symbol of the constellation")]
    NotInAlphabet(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is singular or not positive definite")]
    Singular,
    #[error("no undetected symbols remain")]
    NothingToDetect,
    #[error("ML search space of {0} candidates exceeds the 2^20 limit")]
    SearchSpaceTooLarge(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
