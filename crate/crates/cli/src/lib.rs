//! Experiment orchestration for the spikesim library: configuration, the
//! six commands and their CSV and JSON outputs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::Path;

pub use commands::{run, CommandKind, CommandOutput};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use output::{csv_body, write_outputs, Written};

/// Run `kind` and write its outputs into `dir`.
pub fn execute(kind: CommandKind, cfg: &ExperimentConfig, dir: &Path, workers: usize) -> Result<(CommandOutput, Written), CliError> {
    let out = run(kind, cfg, workers)?;
    let written = write_outputs(dir, kind.name(), &out.table, &out.report, &cfg.output.formats)?;
    Ok((out, written))
}
