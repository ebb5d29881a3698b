//! Crate-wide error type and process exit-code mapping.

use thiserror::Error;

/// Coarse classification used to pick the CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad command-line usage or configuration (exit code 2).
    Usage,
    /// Malformed or inconsistent input data (exit code 3).
    Data,
    /// A simulator invariant was violated; indicates a bug (exit code 4).
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("workload spec has no apps")]
    EmptyApps,
    #[error("reuse_factor must be non-negative, got {0}")]
    NegativeReuseFactor(f64),
    #[error("block size must be 64 or 128 MB, got {0}")]
    InvalidBlockSize(u64),
    #[error("no requests in trace input")]
    EmptyTrace,
    #[error("line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("line {line}: seq {seq} does not increase over previous seq {prev}")]
    NonMonotoneSeq { line: usize, seq: u64, prev: u64 },
    #[error("unknown block {0}")]
    UnknownBlock(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("block {block} replica list references unknown node {node}")]
    UnknownReplicaNode { block: String, node: String },
    #[error("block {block} has {got} replicas, expected {expected}")]
    ReplicationMismatch {
        block: String,
        got: usize,
        expected: usize,
    },
    #[error("task record references unknown job {0}")]
    UnknownJob(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("single-class dataset: training needs both labels")]
    SingleClass,
    #[error("non-finite feature value at row {0}")]
    NonFiniteFeature(usize),
    #[error("feature dimension mismatch: {got} vs {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("feature schema mismatch: model expects {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },
    #[error("train_fraction must be in (0,1), got {0}")]
    FractionOutOfRange(f64),
    #[error("block {0} is not resident in the cache")]
    NotResident(String),
    #[error("block {0} is already resident in the cache")]
    DuplicateInsert(String),
    #[error("oracle classifier needs a labeled trace; request seq {0} has no label")]
    UnlabeledRequest(u64),
    #[error("policy hsvmlru needs a classifier")]
    MissingClassifier,
    #[error("baseline value must be positive, got {0}")]
    ZeroBaseline(f64),
    #[error("empty simulation result")]
    EmptyResult,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("all kernel candidates failed to train: {0}")]
    AllCandidatesFailed(String),
    #[error("metadata inconsistency: {0}")]
    InconsistentMetadata(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::FractionOutOfRange(_) | Error::MissingClassifier => {
                ErrorKind::Usage
            }
            Error::InconsistentMetadata(_) => ErrorKind::Internal,
            _ => ErrorKind::Data,
        }
    }

    /// Process exit code per the CLI contract: 2 usage, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Internal => 4,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
