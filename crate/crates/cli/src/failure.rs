//! Error type carrying the process exit code.

use std::fmt;

use musobench::corpus::CorpusError;
use musobench::harness::HarnessError;
use musobench::report::ReportError;

pub const USAGE: u8 = 1;
pub const INTEGRITY: u8 = 2;
pub const ENDPOINT: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn integrity(message: impl Into<String>) -> Self {
        Self {
            code: INTEGRITY,
            message: message.into(),
        }
    }

    pub fn endpoint(message: impl Into<String>) -> Self {
        Self {
            code: ENDPOINT,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn io_code(e: &std::io::Error) -> u8 {
    // a missing input is a usage problem, anything else is about the data
    if e.kind() == std::io::ErrorKind::NotFound {
        USAGE
    } else {
        INTEGRITY
    }
}

fn corpus_code(e: &CorpusError) -> u8 {
    match e {
        CorpusError::Config(_) => USAGE,
        CorpusError::Io(io) => io_code(io),
        _ => INTEGRITY,
    }
}

fn harness_code(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(_) => USAGE,
        HarnessError::UnsupportedEndpoint(_) => ENDPOINT,
        HarnessError::Corpus(c) => corpus_code(c),
        HarnessError::Io(io) => io_code(io),
        HarnessError::Mismatch(_) | HarnessError::Journal(_) => INTEGRITY,
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Self {
            code: corpus_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self {
            code: harness_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let code = match &e {
            ReportError::Harness(h) => harness_code(h),
            ReportError::Corpus(c) => corpus_code(c),
            ReportError::Io(io) => io_code(io),
            _ => INTEGRITY,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: io_code(&e),
            message: e.to_string(),
        }
    }
}
