use thiserror::Error;

/// Errors surfaced by the verification laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("MAC key must be non-empty")]
    InvalidKey,

    #[error("row {row} has {got} values, schema expects {expected}")]
    SchemaMismatch {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("duplicate attribute `{0}` in schema")]
    DuplicateAttribute(String),

    #[error("cannot sample from an empty relation")]
    EmptyPopulation,

    #[error("requested id {0} outside population 1..={1}")]
    IdOutOfRange(u64, u64),

    #[error("server withheld requested tuple id {0}")]
    WithheldTuple(u64),

    #[error("tuple id {0} failed MAC verification")]
    Tamper(u64),

    #[error("aggregate over zero matching tuples is undefined")]
    EmptyAggregate,

    #[error("sketch estimate undefined: no sketch tuples match the predicate")]
    UndefinedEstimate,

    #[error("influence bound c_{index} = {value} must be positive")]
    InvalidInfluence { index: usize, value: f64 },

    #[error("epsilon = 0 gives an unbounded sample size")]
    UnboundedSampleSize,

    #[error("p_tn = 0: verification never catches cheats, no alpha deters")]
    Undeterrable,

    #[error("strategy `{strategy}` does not apply to {query} queries")]
    UnsupportedStrategy { strategy: String, query: String },

    #[error("show-work audit requires mismatched claims")]
    NoMismatch,

    #[error("invalid game configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
