//! Command implementations behind the `virfuse` binary.
//!
//! Every command validates its flags before computing and returns its
//! primary output as a string; the binary prints it. Files are written only
//! to paths named in flags.

pub mod commands;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or input files; exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Resonance, failed certificate or failed verification; exit code 2.
    #[error("{0}")]
    Math(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Math(_) => 2,
        }
    }
}

/// Output of a command: what goes to stdout, notes for stderr, and a
/// mathematical failure to report after printing (exit code 2).
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub notes: Vec<String>,
    pub failure: Option<String>,
}

impl Output {
    fn text(stdout: String) -> Self {
        Output { stdout, ..Default::default() }
    }
}

/// Worker cap from `VIRFUSE_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("VIRFUSE_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("VIRFUSE_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}
