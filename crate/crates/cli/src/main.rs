//! `mbm`: generate, shape and simulate media-based modulation constellations.

mod args;
mod commands;
mod error;
mod manifest;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { CliError::USAGE } else { 0 });
        }
    };
    let argv: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a, &argv),
        Command::Optimize(a) => commands::optimize(&a, &argv),
        Command::Simulate(a) => commands::simulate(&a, &argv),
        Command::Analytic(a) => commands::analytic(&a),
        Command::DminStats(a) => commands::dmin_stats(&a, &argv),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
