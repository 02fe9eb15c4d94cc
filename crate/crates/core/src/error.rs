use thiserror::Error;

pub type Result<T> = std::result::Result<T, NesError>;

#[derive(Debug, Error)]
pub enum NesError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no edges")]
    EmptyGraph,

    #[error("sample size k={k} must satisfy 1 <= k <= n={n}")]
    SampleSize { k: usize, n: usize },

    #[error("invalid node set: {0}")]
    InvalidNodes(String),

    #[error("cannot walk on edgeless subgraph")]
    EdgelessSubgraph,

    #[error("subgraph size {k} exceeds exact threshold {threshold}; use sampled mode or force exact")]
    ExactTooLarge { k: usize, threshold: usize },

    #[error("graph with {n} nodes exceeds dense oracle limit {limit}")]
    GraphTooLarge { n: usize, limit: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("rank {d} exceeds maximum {max}")]
    RankTooLarge { d: usize, max: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("graph volume must be positive, got {0}")]
    NonPositiveVolume(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("label file references unknown node id {0}")]
    UnknownLabelNode(u64),

    #[error("config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<NesError>,
    },
}

impl NesError {
    pub(crate) fn at_stage(self, stage: &'static str) -> NesError {
        match self {
            NesError::Stage { .. } => self,
            other => NesError::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Stage name when the error was raised inside the pipeline.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            NesError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
