// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} bins, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("window contains no observations")]
    EmptyWindow,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("power bound is undefined when the distance between distributions is zero")]
    UndefinedPower,

    #[error("detector received an observation it cannot use: {0}")]
    UnsupportedObservation(&'static str),

    #[error("detector halted after alarm at t={0}")]
    Halted(u64),

    #[error("replicate {replicate} (seed {seed}): {source}")]
    Replicate { replicate: u64, seed: u64, source: Box<Error> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
