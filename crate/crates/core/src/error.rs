use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("problem must have at least one coordinate")]
    EmptyProblem,

    #[error("train eigenvalues must be sorted non-increasing (index {index})")]
    UnsortedEigenvalues { index: usize },

    #[error("train eigenvalue {index} must be strictly positive, got {value}")]
    NonPositiveTrainEigenvalue { index: usize, value: f64 },

    #[error("population eigenvalue {index} must be non-negative, got {value}")]
    NegativePopulationEigenvalue { index: usize, value: f64 },

    #[error("value must be finite: {name} = {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("basis columns are not orthonormal (max deviation {deviation:e})")]
    NonOrthonormalBasis { deviation: f64 },

    #[error("matrix must be square and symmetric: {name}")]
    NotSymmetric { name: &'static str },

    #[error("covariances do not commute (max |commutator| = {residual:e})")]
    NotCommuting { residual: f64 },

    #[error("early-stopping threshold must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("step size must be positive, got {0}")]
    NonPositiveStepSize(f64),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("snapshot count must be at least 2, got {0}")]
    TooFewSnapshots(usize),

    #[error("step size {step} is unstable: 1 - 2*step*gamma_1 = {factor} must be positive")]
    UnstableStep { step: f64, factor: f64 },

    #[error("dataset must contain at least one sample")]
    EmptyDataset,

    #[error("sample {sample} has basis index {index}, outside dimension {dim}")]
    SampleOutOfRange { sample: usize, index: usize, dim: usize },

    #[error("sample {sample} label {label} disagrees with ground truth {expected}")]
    InconsistentLabel { sample: usize, label: f64, expected: f64 },

    #[error("empirical covariance has no positive direction")]
    ZeroCovariance,

    #[error("stop-time bracket did not close")]
    BracketFailure,

    #[error("small-set start index {start} out of range 1..{dim} (0-based)")]
    SmallSetOutOfRange { start: usize, dim: usize },

    #[error("no eigenvalue gap at small-set start {start} (0-based): p = {p}")]
    NoEigenvalueGap { start: usize, p: f64 },

    #[error("small eigenspace carries no initial residual")]
    DegenerateSmallSet,

    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for errors meaning the Lemma's hypotheses cannot be stated for
    /// the instance at all (as opposed to malformed input).
    pub fn is_inapplicable(&self) -> bool {
        matches!(self, Error::NoEigenvalueGap { .. } | Error::DegenerateSmallSet)
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}
