use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // graph construction and cut quantities
    #[error("vertex count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("edge ({i}, {j}) is out of range for a graph with {n} vertices")]
    VertexOutOfRange { i: usize, j: usize, n: usize },
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) has invalid weight {w}")]
    InvalidWeight { i: usize, j: usize, w: f64 },
    #[error("edge ({i}, {j}) appears more than once")]
    DuplicateEdge { i: usize, j: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("k = {k} must satisfy 1 <= k < {n}")]
    InvalidNeighborCount { k: usize, n: usize },
    #[error("point {index} has dimension {got}, expected {expected}")]
    RaggedPoints { index: usize, expected: usize, got: usize },
    #[error("subset must be a proper nonempty subset of the vertex set")]
    ImproperSubset,
    #[error("graph is not connected")]
    Disconnected,

    // energy
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("no zero-sum l1 subgradient exists (n+ = {positive}, n- = {negative}, n0 = {zeros})")]
    NoZeroSumSubgradient { positive: usize, negative: usize, zeros: usize },
    #[error("empty vector")]
    Empty,

    // solvers
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value encountered at inner iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    // data
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: bad magic number {1:#010x}")]
    BadMagic(PathBuf, u32),
    #[error("{0}: truncated payload")]
    Truncated(PathBuf),
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code: 2 for configuration, 3 for data, 4 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::InvalidNeighborCount { .. } => 2,
            Error::Degenerate(_)
            | Error::NoZeroSumSubgradient { .. }
            | Error::Empty
            | Error::NonFinite { .. }
            | Error::Invariant(_) => 4,
            _ => 3,
        }
    }
}
