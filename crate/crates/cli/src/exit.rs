//! Process exit codes and the mapping from library errors onto them.

use std::fmt;
use std::io;

use sopforge::config::ConfigError;
use sopforge::eval::EvalError;
use sopforge::llm::LlmError;
use sopforge::pool::log::LogError;
use sopforge::sop::SopError;

pub const SUCCESS: u8 = 0;
/// Run failed: backend, sandbox, I/O or an action that could not be completed.
pub const FAILURE: u8 = 1;
/// The round limit stopped the run; partial outputs were written.
pub const ROUND_LIMIT: u8 = 3;
/// Bad flags or flag values.
pub const USAGE: u8 = 64;
/// An input file exists but its content is malformed or unusable.
pub const DATA: u8 = 65;
/// A required input file or directory is missing.
pub const NO_INPUT: u8 = 66;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl fmt::Display) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new(USAGE, message)
    }

    fn io(context: &str, e: &io::Error) -> Self {
        let code = if e.kind() == io::ErrorKind::NotFound {
            NO_INPUT
        } else {
            FAILURE
        };
        Self::new(code, format!("{context}: {e}"))
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match &e {
            ConfigError::Read { .. } => Self::new(NO_INPUT, e),
            ConfigError::Parse { .. } | ConfigError::UnknownRole(_) => Self::new(DATA, e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match &e {
            EvalError::Range(_) => Self::usage(e),
            EvalError::NoSourceFiles(_) => Self::new(NO_INPUT, e),
            EvalError::Io(io) => Self::io("evaluation", io),
            EvalError::Domain { .. }
            | EvalError::SampleCountTooSmall { .. }
            | EvalError::Format { .. }
            | EvalError::UnknownTask(_)
            | EvalError::ZeroLines => Self::new(DATA, e),
        }
    }
}

impl From<LogError> for Failure {
    fn from(e: LogError) -> Self {
        match &e {
            LogError::Io(io) => Self::io("message log", io),
            LogError::Corrupt { .. } | LogError::SeqGap { .. } => {
                Self::new(DATA, format!("corrupt message log: {e}"))
            }
        }
    }
}

impl From<LlmError> for Failure {
    fn from(e: LlmError) -> Self {
        match &e {
            LlmError::PlaybookFormat { .. } => Self::new(DATA, e),
            _ => Self::new(FAILURE, e),
        }
    }
}

impl From<SopError> for Failure {
    fn from(e: SopError) -> Self {
        match &e {
            SopError::IdeaEmpty => Self::usage(e),
            SopError::InvalidConfig(_) => Self::new(DATA, e),
            SopError::RoundLimitExceeded(_) => Self::new(ROUND_LIMIT, e),
            _ => Self::new(FAILURE, e),
        }
    }
}
