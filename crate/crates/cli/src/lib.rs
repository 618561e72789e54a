//! Command-line driver for the cylinder quasi-geostrophic simulator:
//! configuration parsing, run orchestration, state persistence, and the
//! diagnostics reports. The numerics live in `cylqg-core`; this crate owns
//! files, formats, and exit codes.

pub mod config;
pub mod diagnose;
pub mod driver;
pub mod fielddump;
pub mod snapshot;

/// Failures with a contractual exit code: 2 for configuration or input-
/// artifact errors, 3 for compatibility (solvability) failures, 1 for
/// everything else. A run that stops because no time step contracts is not
/// an error — the caller maps that stop reason to exit code 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compat(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compat(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Compat(m) => write!(f, "compatibility failure: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}
