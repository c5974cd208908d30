use std::process::ExitCode;

use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;
pub const EXIT_CONVERGENCE: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
            CliError::Convergence(_) => EXIT_CONVERGENCE,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

impl From<ldl_core::Error> for CliError {
    fn from(e: ldl_core::Error) -> Self {
        use ldl_core::Error::*;
        let msg = e.to_string();
        match e {
            InvalidModel(_) | Domain(_) | Parse { .. } | IllFormed(_) | KernelProduct(_) => CliError::Validation(msg),
            Singular { .. } | Tolerance { .. } | Quadrature { .. } => CliError::Tolerance(msg),
            Convergence(_) => CliError::Convergence(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
