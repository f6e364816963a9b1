use thiserror::Error;

use crate::lp::LpError;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidPoint(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid payoff specification: {0}")]
    InvalidPayoffs(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("markov chain is reducible")]
    Reducible,
    #[error("markov chain is periodic (period {0})")]
    Periodic(usize),
    #[error("history of length {0} is not supported by the model")]
    UnsupportedHistory(usize),
    #[error("support is affinely dependent")]
    AffinelyDependent,
    #[error("state {0} has zero marginal mass")]
    ZeroMarginal(usize),
    #[error("conditional {0:?} is not in the policy domain")]
    UnknownConditional(Vec<f64>),
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
    #[error("induced chain is not unichain: {0} recurrent classes")]
    Multichain(usize),
    #[error("period {period}: {source}")]
    AtPeriod {
        period: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at(self, period: usize) -> Self {
        Error::AtPeriod {
            period,
            source: Box::new(self),
        }
    }
}
