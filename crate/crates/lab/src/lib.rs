//! Std companion of `vacancy-core`: configuration files, output formats,
//! parallel simulation drivers, statistical checks and the command line.

// negated comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

pub mod cli;
pub mod config;
pub mod io;
pub mod sim;
pub mod stats;
pub mod verify;

pub use vacancy_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {}", .0.display(), .1)]
    Io(PathBuf, std::io::Error),
    #[error("replica {replica}: {message}")]
    WindowExhausted { replica: u64, message: String },
    #[error("lambda too small: {0}")]
    LambdaTooSmall(String),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Io(..) | Error::Stats(_) => 1,
            Error::WindowExhausted { .. } => 2,
            Error::LambdaTooSmall(_) => 3,
        }
    }
}
