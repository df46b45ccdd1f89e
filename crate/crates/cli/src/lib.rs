//! Configuration parsing, command execution and artifact formats for the `eas` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, Reporter};
pub use config::{parse_config, Command, RunConfig};
pub use error::CliError;
