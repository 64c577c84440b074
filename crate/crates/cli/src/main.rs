//! `tabbench`: build tabular benchmarks, analyze them, and race optimizers
//! on them.

mod analyze;
mod args;
mod config;
mod generate;
mod runs;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::GenGrid(a) => generate::gen_grid(a),
        Command::GenSynth(a) => generate::gen_synth(a),
        Command::Validate(a) => generate::validate(a),
        Command::Query(a) => generate::query(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Run(a) => runs::run(a),
        Command::Compare(a) => runs::compare_cmd(a),
        Command::Report(a) => runs::report(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
