use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("agent {agent} out of range (instance has {agents} agents)")]
    AgentOutOfRange { agent: usize, agents: usize },

    #[error("good {good} out of range (instance has {goods} goods)")]
    GoodOutOfRange { good: usize, goods: usize },

    #[error("good {good} appears more than once")]
    DuplicateGood { good: usize },

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("agent {agent} has a negative value for good {good}")]
    NegativeValue { agent: usize, good: usize },

    #[error("an instance needs at least one agent")]
    NoAgents,

    #[error("bundle count must be at least 1")]
    ZeroBundles,

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("invalid priority ranking: {0}")]
    InvalidRanking(String),

    #[error("partition does not cover its ground set: {0}")]
    InvalidPartition(String),

    #[error("MMS search exceeded its budget of {budget} nodes")]
    BudgetExhausted { budget: u64 },

    #[error("input size {size} exceeds the cap of {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("sequence is not non-increasing at position {index}")]
    NotMonotone { index: usize },

    /// A proven guarantee failed to hold. This always indicates a bug.
    #[error("guarantee violated: {0}")]
    GuaranteeViolated(String),

    /// A hard instance did not produce the failure it was built for.
    #[error("expected failure did not occur: {0}")]
    NoFailure(String),
}
