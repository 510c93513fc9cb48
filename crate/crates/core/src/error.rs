use thiserror::Error;

use crate::graph::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(ValidationReport),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),

    #[error("edge ({u}, {v}) listed twice with differing weights {first} and {second}")]
    ConflictingEdge {
        u: String,
        v: String,
        first: f64,
        second: f64,
    },

    #[error("graph is disconnected: {0} components")]
    Disconnected(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("rank {0} is outside the supported range 1..=8")]
    UnsupportedRank(usize),

    #[error("fiber metric at vertex `{vertex}` is not usable: {reason}")]
    BadMetric { vertex: String, reason: String },

    #[error("connection violates {condition} on edge ({u}, {v}) by {defect:e}")]
    BadConnection {
        u: String,
        v: String,
        condition: &'static str,
        defect: f64,
    },

    #[error("endomorphism field is not pointwise self-adjoint (defect {0:e})")]
    NotSelfAdjoint(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("operator is not self-adjoint in its weighted inner product (defect {0:e})")]
    NotWeightedHermitian(f64),

    #[error("heat kernels require a real scalar operator")]
    NotScalar,

    #[error("time {0} is not on the kernel's time grid")]
    TimeNotOnGrid(f64),

    #[error("control pair is not integrable: {0}")]
    NotIntegrable(String),

    #[error("control pair mismatch: {0}")]
    ControlMismatch(String),

    #[error("empty vertex subset")]
    EmptySubset,

    #[error("eigendecomposition failed")]
    Eigen,

    #[error("input format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
