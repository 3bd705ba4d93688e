use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("inconsistent height family: {0}")]
    Reconstruction(String),
    #[error("edge {edge} outside the support [{lo}, {hi}]")]
    EdgeOutOfRange { edge: i64, lo: i64, hi: i64 },
    #[error("no tagged particle: {0}")]
    NoTaggedParticle(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("rejection budget of {budget} tries exhausted (acceptance so far {accepted}/{tries})")]
    RejectionBudget { budget: u64, accepted: u64, tries: u64 },
    #[error("state space too large: {size} > {limit}")]
    SizeBound { size: usize, limit: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("too many invalid runs: {invalid} of {total} touched the window boundary")]
    TooManyInvalid { invalid: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
