use std::fmt::Display;

use ctcov_core::Error;

pub const USAGE: u8 = 1;
pub const INPUT: u8 = 2;
pub const RUNTIME: u8 = 3;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(message: impl Display) -> Self {
        Self {
            code: USAGE,
            error: anyhow::anyhow!("{message}"),
        }
    }

    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: INPUT,
            error: error.into(),
        }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: RUNTIME,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) => USAGE,
            Error::ModelFormat(_)
            | Error::DimensionMismatch(_)
            | Error::NonFinite(_)
            | Error::Bounds { .. }
            | Error::Format { .. }
            | Error::MisclassifiedSeed { .. }
            | Error::SeedMismatch(_)
            | Error::Json(_) => INPUT,
            Error::IterationLimit(_) | Error::Io(_) => RUNTIME,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

pub trait Context<T> {
    /// Attaches `what` to the error message, keeping the exit code.
    fn context(self, what: impl Display) -> Result<T, Failure>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
    fn context(self, what: impl Display) -> Result<T, Failure> {
        self.map_err(|e| {
            let f: Failure = e.into();
            Failure {
                code: f.code,
                error: f.error.context(what.to_string()),
            }
        })
    }
}
