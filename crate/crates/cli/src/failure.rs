use std::fmt;

use optimal_balance::Error;

pub const EXIT_VERIFICATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DATA: u8 = 4;

/// An error message together with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn verification(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VERIFICATION,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Config(_) | Error::Domain(_) | Error::Capability(_) => EXIT_CONFIG,
            Error::Data(_) => EXIT_DATA,
            Error::Evaluation { .. }
            | Error::Integration { .. }
            | Error::Budget { .. }
            | Error::Solver { .. } => EXIT_VERIFICATION,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Self::io(err.to_string())
    }
}
