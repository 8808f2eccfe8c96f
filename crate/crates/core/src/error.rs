use alloc::string::String;

/// Errors reported by the model, the estimators and the inference routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("affinity entry {value} exceeds 1 (dense regime): mean degree too large for N")]
    DenseRegime { value: f64 },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("{k}! permutations is too many for exhaustive label matching (k must be <= 8)")]
    TooManyGroups { k: usize },
    #[error("affinity matrix has no positive entry")]
    ZeroAffinity,
    #[error("graph has no edges; there is no signal to fit")]
    EmptyGraph,
    #[error("no sign change of the estimating equation on the search interval")]
    NoSignChange,
    #[error("{failed} of {total} snapshots failed to converge")]
    SweepFailed { failed: usize, total: usize },
    #[error("at least one transition (T >= 1) is required")]
    NoTransitions,
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidParameter(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
