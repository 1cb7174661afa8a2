use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("base must be at least 2 (got {0})")]
    InvalidBase(u32),

    #[error("digit {digit} is out of range for base {base}")]
    DigitOutOfRange { digit: u32, base: u32 },

    #[error("digit {0} appears more than once")]
    DuplicateDigit(u32),

    #[error("progression length k must be at least 3 (got {0})")]
    InvalidLength(u32),

    #[error("digit set must be a proper subset of [0, {}]", .base - 1)]
    NotProperSubset { base: u32 },

    #[error("{0} is not a candidate extension of this state")]
    NotACandidate(u32),

    #[error("set contains a {length}-term progression starting at {start} with difference {step}")]
    ContainsProgression { start: u64, step: u64, length: u32 },

    #[error("set must be non-empty with positive elements")]
    NeedsPositiveElements,

    #[error("invalid precision configuration: {0}")]
    InvalidPrecision(String),

    #[error("requested precision {target:e} not reached by depth {depth}; best bound {best_bound:e}")]
    PrecisionNotReached { target: f64, best_bound: f64, depth: u32 },

    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),

    #[error("search exceeded the node budget of {budget} states; use a constrained mode (root branch, greedy deviation or term-wise caps)")]
    BudgetExceeded { budget: u64 },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("malformed result row: {0}")]
    Row(String),

    #[error("i/o error: {0}")]
    Io(String),
}
