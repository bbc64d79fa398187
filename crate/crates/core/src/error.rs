use thiserror::Error;

use crate::graph::{EdgeId, FactorId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("factor {factor}: dimension mismatch (expected {expected}, got {found})")]
    DimensionMismatch {
        factor: FactorId,
        expected: usize,
        found: usize,
    },
    #[error("non-binary config: entry {value} at coordinate {coordinate}")]
    NonBinaryConfig { coordinate: usize, value: u8 },
    #[error("factor domain must contain at least one configuration")]
    EmptyDomain,
    #[error("duplicate configuration at index {0}")]
    DuplicateConfig(usize),
    #[error(
        "projection condition violated on coupling ({i},{j}): row {row} of A x equals {count} for config {config}"
    )]
    ProjectionCondition {
        i: FactorId,
        j: FactorId,
        config: usize,
        row: usize,
        count: usize,
    },
    #[error("projection entry ({row},{col}) out of range for a {rows}x{cols} matrix")]
    ProjectionRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("coupling ({i},{j}): message dimensions differ ({ki} vs {kj})")]
    MessageDimension {
        i: FactorId,
        j: FactorId,
        ki: usize,
        kj: usize,
    },
    #[error("duplicate coupling between factors {0} and {1}")]
    DuplicateEdge(FactorId, FactorId),
    #[error("coupling of factor {0} with itself")]
    SelfCoupling(FactorId),
    #[error("unknown factor {0}")]
    UnknownFactor(FactorId),
    #[error("unknown coupling edge {0}")]
    UnknownEdge(EdgeId),
    #[error("coupling edge {edge} is not incident to factor {factor}")]
    NotIncident { factor: FactorId, edge: EdgeId },
    #[error("configuration {config} not in domain of factor {factor}")]
    ConfigOutOfDomain { factor: FactorId, config: usize },
    #[error("labeling covers {found} factors, graph has {expected}")]
    LabelingLength { expected: usize, found: usize },
    #[error("direction vector violates the strict sign condition at coordinate {0}")]
    InvalidDirection(usize),
    #[error("factor {0} has no joint closed form; generic maximizer handles a single target only")]
    JointMessageUnsupported(FactorId),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("send weights sum to {0} > 1")]
    WeightSum(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("empty candidate set for node {0}")]
    EmptyCandidateSet(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("search space too large for exhaustive enumeration ({0})")]
    SizeCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
