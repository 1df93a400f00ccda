//! Command-line front end: matrix files, run configuration and the
//! solve / sweep / ablate / synth / metrics / edit commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "semsub", version, about = "Learn and evaluate semantic latent directions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn W from latents and boundaries
    Solve(RunConfig),
    /// Solve over an (alpha, lambda) grid
    Sweep(RunConfig),
    /// Compare the full solver against its ablations
    Ablate(RunConfig),
    /// Write a planted synthetic problem
    Synth(RunConfig),
    /// Correlation table of score changes under edits
    Metrics(RunConfig),
    /// Move a latent vector along one direction
    Edit(RunConfig),
}

impl Command {
    pub fn run(self) -> Result<(), CliError> {
        use commands::*;
        match self {
            Command::Solve(c) => cmd_solve(&c.merged()?),
            Command::Sweep(c) => cmd_sweep(&c.merged()?),
            Command::Ablate(c) => cmd_ablate(&c.merged()?),
            Command::Synth(c) => cmd_synth(&c.merged()?),
            Command::Metrics(c) => cmd_metrics(&c.merged()?),
            Command::Edit(c) => cmd_edit(&c.merged()?),
        }
    }
}
