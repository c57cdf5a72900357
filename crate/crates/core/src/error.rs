use thiserror::Error;

/// Everything that can go wrong inside the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcsError {
    #[error("Fock cutoff must be at least 2, got {0}")]
    CutoffTooLow(usize),

    #[error("cutoff {dim} too small: trace deficit {deficit:.3e} exceeds tolerance {tol:.1e}")]
    CutoffTooSmall { dim: usize, deficit: f64, tol: f64 },

    #[error("two-copy headroom violated: input support reaches n = {support} but cutoff {dim} allows at most {limit}")]
    InsufficientHeadroom { support: usize, dim: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid mode index {index} for a {modes}-mode operator")]
    InvalidMode { index: usize, modes: usize },

    #[error("degenerate denominator {value:.3e} (purity below resolution)")]
    DegenerateDenominator { value: f64 },

    #[error("bootstrap denominators cross zero in {crossings} of {resamples} resamples")]
    UnstableDenominator { crossings: usize, resamples: usize },

    #[error("round-off budget {budget:.3e} exceeds {limit:.1e}")]
    RoundOffBudget { budget: f64, limit: f64 },

    #[error("operation needs {needed} dense entries, guard allows {limit}")]
    MemoryGuard { needed: usize, limit: usize },

    #[error("phase-space grid check failed: {0}")]
    GridTolerance(String),

    #[error("singular covariance matrix")]
    SingularCovariance,

    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, QcsError>;
