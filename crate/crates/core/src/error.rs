use crate::formula::VarId;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("variable {0} has no value")]
    MissingVariable(VarId),
    #[error("formula contains a quantifier")]
    QuantifiedInput,
    #[error("`{0}` mixes variables from both parts of the split")]
    MixedAtom(String),
    #[error("integer problem outside the supported fragment: {0}")]
    UnsupportedInteger(String),
    #[error("`{0}` is not a gap-order constraint")]
    NotGapOrder(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("word has {word} symbols but the run has {positions} positions")]
    LengthMismatch { word: usize, positions: usize },
    #[error("graph exceeded the budget of {0} nodes")]
    BudgetExceeded(usize),
    #[error("no finite-summary criterion applies")]
    NoSummaryFound,
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("`{0}` names both a state and an action")]
    AmbiguousAtom(String),
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),
    #[error("system already has a dummy initial state")]
    AlreadyExtended,
}

pub type Result<T> = std::result::Result<T, Error>;
