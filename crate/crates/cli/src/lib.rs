//! Command implementations behind the `srctrace` binary.
//!
//! Every command reads a manifest and embedding files, writes CSV, JSON and
//! text artifacts into its output directory and prints a short summary.
//! Reruns with the same inputs rewrite identical bytes.

pub mod args;
pub mod config;
pub mod data;
pub mod error;

pub mod commands {
    pub mod attribute;
    pub mod condense;
    pub mod ingest;
    pub mod neighbors;
    pub mod ood;
    pub mod report;
    pub mod sweep;
}

use std::io::Write;

use args::{Cli, Command};
use config::{parse_field, RunConfig};
pub use error::{CliError, Result, EXIT_DATA, EXIT_USAGE};

/// Runs one parsed command line, printing summaries to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(&a, stdout).map(drop),
        Command::Attribute(a) => commands::attribute::run(&RunConfig::load(&a)?, stdout).map(drop),
        Command::Sweep(a) => {
            let mut cfg = RunConfig::load(&a.run)?;
            if !a.layers.is_empty() {
                cfg.layers = a.layers.clone();
            } else if a.run.layer.is_some() {
                cfg.layers = vec![cfg.layer];
            }
            if !a.support.is_empty() {
                cfg.support = a
                    .support
                    .iter()
                    .map(|s| s.parse().map_err(|e| CliError::Usage(format!("{e}"))))
                    .collect::<Result<_>>()?;
            }
            commands::sweep::run(&cfg, stdout).map(drop)
        }
        Command::Ood(a) => {
            commands::ood::run(&RunConfig::load(&a.run)?, a.per_dataset, stdout).map(drop)
        }
        Command::AnalyzeNeighbors(a) => {
            let group = a.group_by.as_deref().map(parse_field).transpose()?;
            commands::neighbors::run(&RunConfig::load(&a.run)?, group, stdout).map(drop)
        }
        Command::Condense(a) => commands::condense::run(&RunConfig::load(&a)?, stdout).map(drop),
        Command::Report(a) => commands::report::run(&a.dir, stdout).map(drop),
    }
}
