//! Model files, reports and the command-line driver on top of `myopic-core`.
//!
//! The binary is a thin wrapper around [`cli::run`].

pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod report;
pub mod sampling;

pub use error::{CliError, Result};
