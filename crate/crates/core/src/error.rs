use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lexicographic valuations have no numeric value")]
    LexicographicNotNumeric,
    #[error("hidden envy is only defined for goods-only instances")]
    ChoresUnsupported,
    #[error("{0} does not have an additive valuation")]
    NotAdditive(String),
    #[error("agent {0} does not have a lexicographic valuation")]
    NotLexicographic(usize),
    #[error("valuations of agents {0} and {1} are not consistent")]
    NotConsistent(usize, usize),
    #[error("{what} of size {size} exceeds the exact-search bound {bound}")]
    TooLarge {
        what: &'static str,
        size: usize,
        bound: usize,
    },
    #[error("bad size: {0}")]
    BadSize(String),
    #[error("vertex set is not a cover of the component: edge ({0}, {1}) is uncovered")]
    NotACover(usize, usize),
    #[error("picking order has {order} turns but there are {items} goods")]
    OrderTooShort { order: usize, items: usize },
    #[error("graph shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("exhaustive search found no EFX allocation")]
    SearchExhausted,
    #[error("search space of {states} states exceeds the budget of {budget}")]
    BudgetExceeded { states: u128, budget: u128 },
    #[error("graph diameter {0:?} is smaller than 4")]
    DiameterTooSmall(Option<usize>),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("constructed allocation failed verification: {0}")]
    Unverified(String),
    #[error("ragged rows in instance {0}: agents rate different numbers of goods")]
    RaggedRows(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
