use qcs_core::QcsError;
use thiserror::Error;

/// Failure classes, each with its own process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Tolerance(String),
    #[error("{0}")]
    InfeasibleCutoff(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Tolerance(_) => 3,
            CliError::InfeasibleCutoff(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<QcsError> for CliError {
    fn from(e: QcsError) -> Self {
        let msg = e.to_string();
        match e {
            QcsError::CutoffTooLow(_)
            | QcsError::CutoffTooSmall { .. }
            | QcsError::InsufficientHeadroom { .. }
            | QcsError::MemoryGuard { .. } => CliError::InfeasibleCutoff(msg),
            QcsError::DegenerateDenominator { .. }
            | QcsError::UnstableDenominator { .. }
            | QcsError::RoundOffBudget { .. }
            | QcsError::GridTolerance(_) => CliError::Tolerance(msg),
            QcsError::InvalidParameter(_)
            | QcsError::DimensionMismatch(_)
            | QcsError::InvalidMode { .. }
            | QcsError::SingularCovariance
            | QcsError::NotApplicable(_) => CliError::Validation(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
