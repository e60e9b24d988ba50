//! File formats, threaded evaluation and the `priorimax` command line on top
//! of [`priorimax_core`].

pub mod commands;
pub mod error;
pub mod exec;
pub mod io;
pub mod manifest;
pub mod svg;

pub use error::{CliError, CliResult, ErrorKind};
pub use priorimax_core as core;
