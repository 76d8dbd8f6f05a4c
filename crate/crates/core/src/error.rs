use serde::Serialize;
use thiserror::Error;

/// Errors raised by the library. Rate functions never error on `+∞`; that is a value.
#[derive(Debug, Error, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "details", rename_all = "snake_case")]
pub enum Error {
    #[error("child index {index} out of range for root degree {degree}")]
    ChildIndex { index: usize, degree: usize },
    #[error("degenerate size-bias: mean root degree is zero")]
    DegenerateSizeBias,
    #[error("measure is not normalized: total mass {0}")]
    NotNormalized(f64),
    #[error("infeasible degree sequence: {0}")]
    InfeasibleDegrees(String),
    #[error("rejection budget of {0} attempts exceeded")]
    RejectionBudget(usize),
    #[error("edge count {m} exceeds the {max} available pairs")]
    TooManyEdges { m: usize, max: usize },
    #[error("edge probability {0} is not in [0, 1]")]
    EdgeProbability(f64),
    #[error("offspring law has zero mean")]
    ZeroMeanOffspring,
    #[error("measure is not admissible: pair-measure asymmetry {0:e}")]
    NotAdmissible(f64),
    #[error("extension kernel undefined at a pair with zero mass")]
    KernelUndefined,
    #[error("inconsistent truncation chain at depth {depth}: deviation {deviation:e}")]
    InconsistentChain { depth: u32, deviation: f64 },
    #[error("threshold c = {c} must lie strictly between {lower} and {upper}")]
    GibbsHypothesis { c: f64, lower: f64, upper: f64 },
    #[error("root finder could not bracket g(lambda) = {0}")]
    Bracket(f64),
    #[error("brute-force dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("no accepted samples after {0} draws")]
    NoAcceptedSamples(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
