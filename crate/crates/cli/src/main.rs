mod args;
mod commands;
mod config;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit-code contract shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Usage = 1,
    AssertionFailed = 2,
    Inapplicable = 3,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage as u8 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Claim(a) => commands::claim::run(a, true),
        Command::Montecarlo(a) => commands::claim::run(a, false),
        Command::Lemma(a) => commands::lemma::run(a),
        Command::Trajectory(a) => commands::trajectory::run(a),
        Command::Landscape(a) => commands::landscape::run(a),
    };
    let status = result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        Status::Usage
    });
    ExitCode::from(status as u8)
}
