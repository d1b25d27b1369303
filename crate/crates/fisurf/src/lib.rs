//! File formats, reports and the `fisurf` command line on top of
//! `fisurf-core`.

pub mod commands;
pub mod export;
pub mod io;
pub mod report;

pub use commands::{configure_threads, run, Cli, CliError, Outcome};
