use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped by the module that raises them; the CLI maps the
/// guard-style variants (size limits, bad arguments) to usage errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // data model
    #[error("response contains tied values at rows {first} and {second} ({value})")]
    TiesInResponse { first: usize, second: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("csv error: {0}")]
    Csv(String),

    // statistics
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("ties present in {0}")]
    TiesPresent(&'static str),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    // partitions
    #[error("partition side is empty")]
    EmptySide,
    #[error("partition does not cover 0..{n} exactly once")]
    NotAPartition { n: usize },
    #[error("size {size} out of range for n = {n} (need n > 4 and min(i, n - i) >= 2)")]
    SizeOutOfRange { size: usize, n: usize },
    #[error("brute-force enumeration limited to n <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("need more than 4 responses, got {0}")]
    TooSmall(usize),
    #[error("index {index} is not in the expected side of the partition")]
    MembershipViolation { index: usize },

    // trees
    #[error("node cannot be split: {0}")]
    Unsplittable(&'static str),
    #[error("inadmissible split rule: {0}")]
    InadmissibleRule(String),
    #[error("expected {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },

    // piecewise-monotone maps
    #[error("transforms have different domains")]
    DomainMismatch,
    #[error("interval [{lo}, {hi}] spans a breakpoint")]
    IntervalSpansBreakpoint { lo: f64, hi: f64 },
    #[error("interval [{lo}, {hi}] is not a refined monotonic interval")]
    NotRefinedInterval { lo: f64, hi: f64 },
    #[error("both transforms have a pre-image of C = {c} on [{lo}, {hi}]")]
    CaseThreePresent { c: f64, lo: f64, hi: f64 },
    #[error("transform is unbounded on its domain")]
    UnboundedTransform,
    #[error("segment {segment} is not strictly {direction}")]
    NotMonotone { segment: usize, direction: &'static str },
    #[error("invalid piecewise map: {0}")]
    InvalidPiecewise(String),

    // symbolic features
    #[error("cannot parse expression {input:?}: {message}")]
    ExprParse { input: String, message: String },
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("invalid architecture {0:?}: use a nonempty string over {{u, b}}")]
    InvalidArchitecture(String),
    #[error("variable x{index} out of range for {d} input columns", index = .index + 1)]
    VariableOutOfRange { index: usize, d: usize },
    #[error("every generated feature was dropped")]
    NoFeatures,
    #[error("{expr} is not finite at row {row}")]
    PartialOperatorDomain { expr: String, row: usize },

    // selection and evaluation
    #[error("k = {k} exceeds the number of features {q}")]
    KTooLarge { k: usize, q: usize },
    #[error("ground truth has no positive labels")]
    NoPositives,
    #[error("selection size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
