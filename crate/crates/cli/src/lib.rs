// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end for `ksdetect`: threshold calibration, benchmark
//! runs, live monitoring of count streams and spectrum checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod monitor;
pub mod results;
pub mod spectrum;

use std::fmt;

pub use config::{CalibrationConfig, CalibrationMethod, DensityConfig, ExperimentConfig, ScenarioConfig};
pub use results::{ResultRow, ResultsTable};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const RUNTIME: i32 = 2;
    pub const ALARM: i32 = 3;
}

/// A problem with the configuration or command-line input, naming the
/// offending field where there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }

    pub fn field(field: &str, message: &str) -> Self {
        Self { message: format!("`{field}`: {message}") }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Command failure, mapped onto an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Runtime(anyhow::Error),
    /// Monitor stopped on an alarm at the given stream time.
    Alarm(u64),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::USAGE,
            CliError::Runtime(_) => exit::RUNTIME,
            CliError::Alarm(_) => exit::ALARM,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
            CliError::Alarm(t) => write!(f, "alarm raised at t={t}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}
