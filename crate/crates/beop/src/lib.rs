//! File formats, run manifests and command implementations behind the
//! `beop` command-line tool. The algorithms live in `beop_core`.

pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;

pub use error::{CliError, CliResult};
