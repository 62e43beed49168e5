mod args;
mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use qgo_core::QgoError;

use crate::args::{Cli, Command};
use crate::config::Layers;

/// Exit status for integration, convergence and ambiguity failures.
const NUMERICAL_FAILURE: u8 = 2;

fn run(cli: Cli) -> anyhow::Result<()> {
    let layers = Layers::new(cli.common)?;
    match cli.command {
        Command::Gen(a) => commands::gen(a, layers),
        Command::Run(a) => commands::run(a, layers),
        Command::Scan(a) => commands::scan(a, layers),
        Command::Bench(a) => commands::bench(a, layers),
        Command::Trace(a) => commands::trace(a, layers),
        Command::Meanfield(a) => commands::meanfield(a, layers),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<QgoError>(),
            Some(QgoError::Integration(_) | QgoError::Convergence(_) | QgoError::Ambiguity(_))
        )
    });
    if numerical {
        NUMERICAL_FAILURE
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
