use std::process::ExitCode;

use clap::Parser;
use semsub_cli::Cli;

fn main() -> ExitCode {
    match Cli::parse().command.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semsub: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
