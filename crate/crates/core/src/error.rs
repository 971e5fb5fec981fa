//! Error type shared across the crate.
//!
//! Agent and arm ids in messages are 1-based to match the edge-list file
//! format and the CSV outputs; the Rust APIs themselves take 0-based indices.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("adjacency matrix is not square ({rows}x{cols})")]
    NonSquareAdjacency { rows: usize, cols: usize },

    #[error("adjacency entry at ({row},{col}) is {value}, expected 0 or 1")]
    InvalidAdjacencyEntry { row: usize, col: usize, value: f64 },

    #[error("adjacency matrix is not symmetric at ({row},{col})")]
    AsymmetricAdjacency { row: usize, col: usize },

    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },

    #[error("graph is not connected")]
    Disconnected,

    #[error("connectivity cap exceeded: no connected graph in {attempts} attempts")]
    ConnectivityCapExceeded { attempts: u32 },

    #[error("spectrum violation: λ_M ≤ −1 (smallest eigenvalue {lambda_min})")]
    SpectrumViolation { lambda_min: f64 },

    #[error("invalid parameter: {what}")]
    InvalidParameter { what: String },

    #[error("edge list line {line}: {reason}")]
    EdgeList { line: usize, reason: String },

    #[error("{what} index {index} out of range for size {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("pull matrix row for agent {agent} must have exactly one entry set")]
    InvalidPullRow { agent: usize },

    #[error("estimate unavailable: agent {agent} has no mass on arm {arm} yet")]
    EstimateUnavailable { agent: usize, arm: usize },

    #[error(
        "count-estimate deviation bound violated at t={t}: agent {agent}, arm {arm}: \
         |{n_hat} − {n_cent}| > ε_n = {eps_n} (+1e-9 slack)"
    )]
    SandwichViolation {
        t: u64,
        agent: usize,
        arm: usize,
        n_hat: f64,
        n_cent: f64,
        eps_n: f64,
    },

    #[error("internal invariant broken: {what}")]
    InternalInvariant { what: String },
}

impl Error {
    /// Whether this error signals a broken runtime invariant (a defect in the
    /// simulator itself) rather than bad input. The CLI maps defects to exit
    /// code 2 and input/validation problems to exit code 1.
    pub fn is_defect(&self) -> bool {
        matches!(
            self,
            Error::SandwichViolation { .. } | Error::InternalInvariant { .. }
        )
    }

    pub(crate) fn invalid(what: impl Into<String>) -> Self {
        Error::InvalidParameter { what: what.into() }
    }

    pub(crate) fn internal(what: impl Into<String>) -> Self {
        Error::InternalInvariant { what: what.into() }
    }

    pub(crate) fn index(what: &'static str, index: usize, len: usize) -> Self {
        Error::IndexOutOfRange { what, index, len }
    }

    pub(crate) fn dims(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
