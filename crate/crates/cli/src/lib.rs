//! File formats, commitments, configuration and commands behind the `contest` binary.

pub mod commands;
pub mod commitment;
pub mod config;
pub mod error;
pub mod formats;
pub mod tournament;

pub use error::{CliError, Result};
