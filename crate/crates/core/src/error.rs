use thiserror::Error;

/// Errors produced anywhere in the testing pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a precondition (empty data, too few values, bad parameter).
    #[error("domain error: {0}")]
    Domain(String),

    /// Observations or matrices with incompatible shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// Two inputs that must describe the same objects disagree in size.
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    /// A ranking payload that is not a bijection on 1..n.
    #[error("not a permutation: {0}")]
    NotPermutation(String),

    /// Internal consistency failure, e.g. zero distance between distinct values.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A k-NNL / k-MST round could not connect every node.
    #[error("infeasible k: round {round} of {k} cannot connect all {nodes} nodes")]
    InfeasibleK { k: usize, round: usize, nodes: usize },

    /// Exhaustive enumeration would exceed the configured cap.
    #[error("enumeration too large: {size} exceeds cap {cap}")]
    EnumerationTooLarge { size: String, cap: u64 },

    /// The permutation-null variance of a statistic vanishes.
    #[error("degenerate null: variance of {statistic} is {variance:e} (mean {mean:e})")]
    DegenerateNull {
        statistic: String,
        variance: f64,
        mean: f64,
    },

    /// Root finding failed to bracket or converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed input file, with 1-based line number when known.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A simulation replicate failed.
    #[error("replicate {index}: {source}")]
    Replicate { index: u64, source: Box<Error> },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
