use std::fmt;
use std::process::ExitCode;

use shiftlab::Error;

pub const VERIFIED: u8 = 0;
pub const FAILED: u8 = 1;
pub const USAGE: u8 = 2;
pub const PRECONDITION: u8 = 3;
pub const HORIZON: u8 = 4;

/// A command outcome other than success, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: USAGE, message: message.into() }
    }

    pub fn usage_from(e: Error) -> Self {
        Failure::usage(e.to_string())
    }

    pub fn io(e: std::io::Error) -> Self {
        Failure::usage(format!("i/o: {e}"))
    }
}

/// Parse and shape problems are usage errors; violated mathematical
/// preconditions and failed splices are precondition errors.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition(_) | Error::SpliceFailed(_) | Error::IllegalPerturbation(_) => PRECONDITION,
            Error::SpaceMismatch(_)
            | Error::InvalidPoint(_)
            | Error::ShapeMismatch(_)
            | Error::OutOfRange(_)
            | Error::Parse(_) => USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn code(result: Result<bool, Failure>) -> ExitCode {
    match result {
        Ok(true) => ExitCode::from(VERIFIED),
        Ok(false) => ExitCode::from(FAILED),
        Err(f) => {
            eprintln!("shiftlab: {f}");
            ExitCode::from(f.code)
        }
    }
}
