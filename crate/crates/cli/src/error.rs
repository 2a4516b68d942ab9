use thiserror::Error;

/// Failures of a CLI run, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("statistical assertion failed: {0}")]
    StatisticalAssertFailed(String),
    #[error("runtime failure: {0}")]
    RuntimeFailure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 64,
            CliError::StatisticalAssertFailed(_) => 2,
            CliError::RuntimeFailure(_) => 1,
        }
    }
}

impl From<kalikow_core::Error> for CliError {
    fn from(e: kalikow_core::Error) -> Self {
        use kalikow_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::NotZeroMean { .. } | E::NotFiberMeanZero | E::RoundingPolicyViolation => {
                CliError::ConfigInvalid(e.to_string())
            }
            other => CliError::RuntimeFailure(other.to_string()),
        }
    }
}
