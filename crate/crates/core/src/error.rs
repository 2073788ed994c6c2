use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("metric undefined on an empty transaction database")]
    EmptyDatabase,
    #[error("antecedent has zero support")]
    ZeroAntecedentSupport,
    #[error("rule has a zero-support marginal (antecedent or consequent)")]
    ZeroMarginalSupport,
    #[error("itemset of size {0} is too small to split into a rule")]
    ItemsetTooSmall(usize),
    #[error("itemset too large to enumerate ({0} items)")]
    ItemsetTooLarge(usize),
    #[error("threshold {name} = {value} out of range")]
    InvalidThreshold { name: &'static str, value: f64 },
    #[error("malformed candidate level: {0}")]
    MalformedLevel(&'static str),
    #[error("item {0} is not part of the item universe")]
    UnknownItem(String),
    #[error("attribute {0} appears more than once in one itemset")]
    AttributeConflict(String),
    #[error("invalid rule: {0}")]
    InvalidRule(&'static str),
    #[error("record count mismatch: {transactions} transactions, {ids} record ids")]
    RecordCountMismatch { transactions: usize, ids: usize },
    #[error("mining threshold below the one the FP-tree was built with")]
    ThresholdBelowTree,
    #[error("pattern growth recursion exceeded depth {0}")]
    RecursionLimit(usize),
    #[error("value {0} outside the discretization domain (must be finite and >= 0)")]
    DiscretizeDomain(f64),
    #[error("score {value} for {field} of student {student} outside [0, 100]")]
    ScoreOutOfRange {
        student: String,
        field: &'static str,
        value: f64,
    },
    #[error("duplicate student id {0}")]
    DuplicateStudent(String),
    #[error("no engagement level for student {0}")]
    MissingLevel(String),
    #[error("need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("feature matrix: {0}")]
    BadMatrix(&'static str),
    #[error("level mapping needs exactly 3 clusters, got {0}")]
    LevelMapping(usize),
    #[error("event of student {0} lies outside its session window")]
    SessionWindow(String),
    #[error("oracle instance too large: {0}")]
    OracleTooLarge(&'static str),
}
