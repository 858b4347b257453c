use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("vertex {0} appears more than once")]
    DuplicateVertex(usize),
    #[error("vertex sets overlap at vertex {0}")]
    OverlappingSets(usize),
    #[error("clone {0} appears in more than one clone class")]
    OverlappingClones(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matching is incomplete: {unmatched} clones are unmatched")]
    IncompleteMatching { unmatched: usize },
    #[error("no simple graph found after {attempts} attempts")]
    SamplingExhausted { attempts: u32 },
    #[error("graph on {n} vertices exceeds the dense eigensolver cap of {cap}; use the power-method estimate")]
    CapacityExceeded { n: usize, cap: usize },
    #[error("recursion did not bring u below {target} within {horizon} steps")]
    Divergence { horizon: usize, target: f64 },
    #[error("recursion drifted by {deviation:e} (relative) from the exact step at t = {step}")]
    PrecisionDrift { step: usize, deviation: f64 },
    #[error("first-phase envelope violated at t = {step}")]
    EnvelopeViolation { step: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
