//! Command line, file formats and acceptance suite for `horizonlab-core`.
//!
//! * [`config`]: the JSON data configuration and inline `--data` specs.
//! * [`format`]: CSV and JSON artifact rendering.
//! * [`manifest`]: output directories and `manifest.json`.
//! * [`rundir`]: continuation run directories that later commands reload.
//! * [`commands`]: one entry point per subcommand.
//! * [`suite`]: the acceptance criteria.

#![allow(clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod manifest;
pub mod rundir;
pub mod suite;

pub use error::{CliError, CliResult};
