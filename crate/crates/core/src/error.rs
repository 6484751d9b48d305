use thiserror::Error;

use crate::redistricting::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value {value} at coordinate {index} is outside [0, 1] or not finite")]
    InvalidDecision { index: usize, value: f64 },

    #[error("no feasible decisions available")]
    EmptyFeasibleSet,

    #[error("trace is empty")]
    EmptyTrace,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergedTraining { epoch: usize },

    #[error("covariance matrix is not positive definite after jitter escalation")]
    NonPositiveDefinite,

    #[error("singular input: {0}")]
    SingularInput(&'static str),

    #[error("input outside domain: {0}")]
    DomainViolation(String),

    #[error("zone has {size} units, exceeding the exact-solve cap of {cap}")]
    ZoneTooLarge { size: usize, cap: usize },

    #[error("balance equations are numerically singular")]
    SingularBalance,

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(Violation),

    #[error("base plan is infeasible: {0}")]
    InfeasibleBase(Violation),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DivergedTraining { .. }
                | Error::NonPositiveDefinite
                | Error::SingularBalance
                | Error::SingularInput(_)
        )
    }

    /// True when the input decision or plan was rejected as infeasible.
    pub fn is_infeasible_input(&self) -> bool {
        matches!(
            self,
            Error::InfeasiblePlan(_) | Error::InfeasibleBase(_) | Error::EmptyFeasibleSet
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
