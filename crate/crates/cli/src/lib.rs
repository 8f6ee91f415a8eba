//! Command implementations behind the `binn` binary.
//!
//! Exit codes: 0 success, 1 runtime or verification failure, 2 invalid
//! configuration or input.

pub mod case;
pub mod commands;
pub mod config;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0} verification check(s) failed")]
    Verify(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) | CliError::Verify(_) => 1,
        }
    }
}
