use abel_core::Error;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Assumption(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Assumption(_) => 2,
            CliError::Numerical(_) => 3,
        })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidInput(_) => CliError::Usage(msg),
            Error::NotAdmissible(_) | Error::DelayBeyondHistory { .. } => CliError::Assumption(msg),
            Error::NoConvergence { .. }
            | Error::DerivativeVanished { .. }
            | Error::QuadratureFailure { .. }
            | Error::OutOfDomain { .. }
            | Error::Unsupported(_)
            | Error::CoefficientOverflow { .. }
            | Error::DomainMismatch { .. }
            | Error::NoAdmissiblePoint { .. } => CliError::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
