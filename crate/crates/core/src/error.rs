use thiserror::Error;

use crate::model::ParamViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature `{dim}` is not finite ({value})")]
    NonFiniteFeature { dim: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid attention state tag {0} (expected 1 = attentive or 2 = distracted)")]
    InvalidStateTag(u8),

    #[error("invalid model parameters: {}", join_violations(.0))]
    InvalidParams(Vec<ParamViolation>),

    #[error("invalid sequence `{subject_id}`: {reason}")]
    InvalidSequence { subject_id: String, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("emission likelihood underflowed to zero at step {step} of sequence `{subject_id}`")]
    EmissionUnderflow { subject_id: String, step: usize },

    #[error("brute-force enumeration needs {terms} terms, above the limit of {limit}")]
    EnumerationTooLarge { terms: u128, limit: u128 },

    #[error(
        "weighted normal equations are singular ({0}); reduce the basis or add regularization"
    )]
    SingularSystem(String),

    #[error("EM iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid EM configuration: {0}")]
    InvalidConfig(String),

    #[error("likelihood ratio statistic is negative ({lambda}); the richer fit failed upstream")]
    NegativeLikelihoodRatio { lambda: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("time {t} lies outside [0, {t_f}]")]
    TimeOutOfRange { t: f64, t_f: f64 },

    #[error("split parameter {0} must lie strictly inside (0, 1)")]
    SplitOutOfRange(f64),

    #[error("LGL node iteration did not converge for n = {0}")]
    LglNonConvergence(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("no feasible path after {restarts} restarts; best candidate violations: {violations}")]
    Infeasible {
        restarts: usize,
        violations: String,
        best: Box<crate::planner::PlanResult>,
    },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn join_violations(v: &[ParamViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
