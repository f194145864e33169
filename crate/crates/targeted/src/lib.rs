//! Command-line roadmap runner over `targeted-core`.
//!
//! A TOML run configuration drives five commands (`validate`, `diagnose`,
//! `estimate`, `sensitivity`, `simulate`). Each writes a JSON report keyed by
//! roadmap step plus CSV tables into an output directory.

pub mod commands;
pub mod config;
pub mod io;
pub mod report;

pub use commands::{run, Command, Invocation};
pub use config::RunConfig;
pub use report::Report;
