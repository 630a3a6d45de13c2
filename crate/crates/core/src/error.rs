use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("basis is not linearly independent")]
    RankDeficient,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("section space is empty")]
    EmptySpace,
    #[error("divisor is not big: no sections up to n = {0}")]
    NotBig(u32),
    #[error("concave transform is unbounded below")]
    UnboundedBelow,
    #[error("schedule is empty")]
    ScheduleEmpty,
    #[error("trivially valued mode needs exactly one place: {0}")]
    ModeMismatch(String),
    #[error("divisor has non-integral coefficient at {0}")]
    NonIntegral(String),
    #[error("divisor degree {0} is not positive")]
    NonPositiveDegree(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
