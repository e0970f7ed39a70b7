use thiserror::Error;

use crate::complexity::GameResult;
use crate::dtree::TreeViolation;

/// Errors produced by the query-complexity laboratory.
#[derive(Debug, Error)]
pub enum QcError {
    #[error("point {point} is out of range for arity {arity}")]
    PointOutOfRange { point: u64, arity: usize },

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("conditioning event has zero probability: {0}")]
    ZeroConditioningMass(String),

    #[error("subcube does not refine the conditioning subcube")]
    NotARefinement,

    #[error("{what} = {value} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("invalid relation: {0}")]
    InvalidRelation(String),

    #[error("invalid truth table: {0}")]
    InvalidTable(String),

    #[error("invalid decision tree: {0}")]
    InvalidTree(TreeViolation),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no tree of depth <= arity reaches success {target}")]
    Unachievable { target: String },

    #[error("iteration limit reached at depth {} before the value bracket closed", .0.depth)]
    IterationLimit(Box<GameResult>),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("inner function has distributional complexity 0 under the chosen distribution")]
    InnerComplexityZero,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("certificate check failed: {0}")]
    CertificateFailed(String),
}

pub type Result<T> = std::result::Result<T, QcError>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> QcError {
    QcError::Parse {
        line,
        msg: msg.into(),
    }
}
