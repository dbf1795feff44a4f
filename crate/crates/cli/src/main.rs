//! `allocsim`: tables, figure data, simulations and convergence checks.
//!
//! Exit status is 0 on success, 2 for usage errors and 3 for runtime
//! failures.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use allocsim::limits::LimitTables;
use clap::Parser;

use crate::config::{Cli, Command, RunConfig};
use crate::error::CliError;
use crate::output::{Table, Writer};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; clap uses 2 otherwise.
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("allocsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<std::path::PathBuf>, CliError> {
    let common = &cli.common;
    let config = match &cli.command {
        Command::Limits(a) => RunConfig::limits(common, a)?,
        Command::Figure(a) => RunConfig::figure(common, a)?,
        Command::Simulate(a) => RunConfig::simulate(common, a)?,
        Command::Converge(a) => RunConfig::converge(common, a)?,
    };
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let limits = LimitTables::new(config.s_max)?;
    let tables: Vec<Table> = match &cli.command {
        Command::Limits(_) => commands::limits::tables(&config, &limits)?,
        Command::Figure(_) => vec![commands::figure::table(&config, &limits)?],
        Command::Simulate(a) => commands::simulate::tables(&config, &a.rule, a.records, &limits)?,
        Command::Converge(a) => vec![commands::converge::table(&config, &a.rule, &limits)?],
    };
    let writer = Writer::new(&common.out, common.format, &config)?;
    tables.iter().map(|t| writer.write(t)).collect()
}
