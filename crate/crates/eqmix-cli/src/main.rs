//! `eqmix` — symmetry testing on the command line.
//!
//! `eqmix test FILE` analyzes one sample; `eqmix simulate` reproduces the
//! Monte Carlo level/power study. Exit code 0 means the run completed,
//! whatever the statistical verdict; nonzero is reserved for operational
//! failures (bad flags, unreadable input, estimation breakdown).

mod args;
mod config;
mod simulate_cmd;
mod test_cmd;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::load_config;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> eqmix::Result<()> {
        let config = load_config(cli.config.as_deref())?;
        match cli.command {
            Command::Test(args) => test_cmd::run(args, config.test),
            Command::Simulate(args) => simulate_cmd::run(args, config.simulate),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
