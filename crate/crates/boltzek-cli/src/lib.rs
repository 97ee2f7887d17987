//! Batch driver for `boltzek`: reads a TOML run configuration, executes the
//! requested stages over an `h` sweep and writes JSON/CSV artifacts plus a
//! pass/fail summary.

pub mod compare;
pub mod config;
pub mod error;
pub mod pipeline;

pub use compare::{compare, Diff, DiffEntry};
pub use config::{RunConfig, Stage};
pub use error::{CliError, CliResult};
pub use pipeline::{run, Check, RunOptions, RunReport};
