use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("arity mismatch for {relation}: expected {expected}, got {got}")]
    Arity {
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("function conflict in {relation}: keys {keys:?} already map to a different value")]
    FunctionConflict { relation: String, keys: Vec<i64> },
    #[error("versions belong to different relation lineages")]
    Lineage,
    #[error("transaction base is not the latest version of {0}")]
    StaleBase(String),
    #[error("invalid interval: lower bound {lo} exceeds upper bound {hi}")]
    InvalidInterval { lo: String, hi: String },
    #[error("key {0} is not present")]
    KeyAbsent(String),
    #[error("key {0} is already present")]
    KeyExists(String),
    #[error("subset violation: interval {0} holds more records in S than in T")]
    NotSubset(String),
    #[error("non-finite summand {0}")]
    NonFinite(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("unknown {kind} {name}")]
    Unknown { kind: &'static str, name: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid rule: {0}")]
    Rule(String),
    #[error("invalid key order: {0}")]
    KeyOrder(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(String),
    /// A maintained structure disagrees with the deltas applied to it.
    #[error("integrity error: {0}")]
    Integrity(String),
}

impl Error {
    pub fn is_integrity(&self) -> bool {
        matches!(self, Error::Integrity(_))
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
