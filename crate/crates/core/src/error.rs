use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("self-loop on `{0}`")]
    SelfLoop(String),

    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),

    #[error("edge {0} -> {1} is not in the graph")]
    MissingEdge(String, String),

    #[error("graph contains a cycle through {0:?}")]
    Cycle(Vec<String>),

    #[error("node sets overlap on `{0}`")]
    OverlappingSets(String),

    #[error("unknown labeled node `{0}`")]
    UnknownLabel(String),

    #[error("invalid intervention label `{0}`")]
    InvalidLabel(String),

    #[error("invalid probability table for `{node}`: {reason}")]
    InvalidTable { node: String, reason: String },

    #[error("value {value} out of range for `{node}` (cardinality {cardinality})")]
    ValueOutOfRange {
        node: String,
        value: usize,
        cardinality: usize,
    },

    #[error("target `{0}` is intervened on")]
    TargetIntervened(String),

    #[error("cannot hide {0}")]
    InvalidHide(String),

    #[error("conditioning event has zero probability: {0}")]
    ZeroProbability(String),

    #[error("zero propensity: {0}")]
    ZeroPropensity(String),

    #[error("empty strata: {0:?}")]
    EmptyStrata(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} bootstrap replicates were degenerate, too few usable ones remain")]
    DegenerateBootstrap(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
