//! Command-line front end: configuration, commands, verification suites and
//! deterministic CSV/JSON export.

pub mod commands;
pub mod config;
pub mod export;
pub mod verify;

use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "kst", version, about = "Kolmogorov superposition reduction of the 2-D Poisson problem")]
pub struct Cli {
    #[command(flatten)]
    pub global: config::GlobalOpts,
    #[command(subcommand)]
    pub command: commands::Command,
}
