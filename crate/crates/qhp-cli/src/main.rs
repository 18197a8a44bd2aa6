//! `qhp`: hitting probabilities of quarter-plane walks from the command line.
//!
//! Exit codes: 0 success, 1 numerical failure (or a failed `compare`),
//! 2 input error.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::Parser;

use args::{Cli, Command};

pub const EXIT_NUMERICAL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

/// `QHP_THREADS` caps the worker pool.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("QHP_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| anyhow!("QHP_THREADS=`{v}` is not a positive integer"))?;
    if n == 0 {
        return Err(anyhow!("QHP_THREADS must be positive"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<qhp_core::Error>() {
        Some(core) if !core.is_input_error() => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Check(a) => commands::check(&a),
        Command::Prob(a) | Command::Sweep(a) => commands::prob(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Constants(a) => commands::constants(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
