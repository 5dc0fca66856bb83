//! Errors shared by the model, distribution, and distance layers.

use thiserror::Error;

/// Errors raised when constructing or evaluating networks and dense
/// distribution tables.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("a graph needs at least one node")]
    EmptyGraph,

    #[error("node {node}: parent {parent} must have a smaller index than the node")]
    ParentOutOfOrder { node: usize, parent: usize },

    #[error("node {node}: parent list must be strictly increasing")]
    UnsortedParents { node: usize },

    #[error("node {node}: fan-in {fan_in} is too large to enumerate parental configurations")]
    TooManyConfigurations { node: usize, fan_in: usize },

    #[error("conditional table has length {got}, expected {expected}")]
    CptLength { got: usize, expected: usize },

    #[error("conditional probability {value} at index {index} is outside [0, 1]")]
    CptRange { index: usize, value: f64 },

    #[error("dimension {d} exceeds the exact-computation limit {d_exact}")]
    DimensionTooLarge { d: usize, d_exact: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("the networks have different dependency graphs")]
    DagMismatch,

    #[error("balance parameter {0} is outside (0, 0.5]")]
    InvalidBalance(f64),

    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("configuration index {index} out of range (m = {m})")]
    ConfigIndexOutOfRange { index: usize, m: usize },
}
