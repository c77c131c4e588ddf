use std::fmt;
use std::process::ExitCode;

use fmds_core::{Error as CoreError, ErrorCategory};

/// Bad flag combination not caught by the argument parser.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Malformed input file, reported with its location.
#[derive(Debug)]
pub struct DataError {
    pub path: String,
    pub line: Option<u64>,
    pub message: String,
}

impl DataError {
    pub fn new(path: impl Into<String>, line: Option<u64>, message: impl Into<String>) -> Self {
        Self { path: path.into(), line, message: message.into() }
    }
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path, line, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for DataError {}

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_NO_CONVERGENCE: u8 = 5;

pub fn exit_code(err: &anyhow::Error) -> ExitCode {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return ExitCode::from(EXIT_USAGE);
        }
        if cause.downcast_ref::<DataError>().is_some() {
            return ExitCode::from(EXIT_DATA);
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return ExitCode::from(match e.category() {
                ErrorCategory::Validation => EXIT_DATA,
                ErrorCategory::Numerical => EXIT_NUMERICAL,
                ErrorCategory::NonConvergence => EXIT_NO_CONVERGENCE,
            });
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            return ExitCode::from(if matches!(e.kind(), csv::ErrorKind::Io(_)) { EXIT_IO } else { EXIT_DATA });
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ExitCode::from(EXIT_IO);
        }
    }
    ExitCode::from(EXIT_IO)
}
