//! Command-line driver: configuration resolution, experiment execution and
//! persistence of records, series and plot data.
//!
//! Each run writes a fresh directory `<out>/<kind>-<hash16>-<k>` holding
//! `record.toml`, the resolved `config.toml`, series as `r,mean,stderr,n`
//! CSV files and gnuplot `.dat` columns.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod persist;
pub mod record;

use args::{Cli, Command, ExactTarget};
use commands::Report;
use config::ExperimentConfig;
use error::CliError;

/// Resolves the command line (flags over `--config` file over defaults).
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    match &cli.command {
        Command::Exact {
            target: ExactTarget::Dimer(a),
        } => config::resolve_exact_dimer(a.clone()),
        Command::Exact {
            target: ExactTarget::Formulas(a),
        } => config::resolve_formulas(a.clone()),
        Command::Mc(a) => config::resolve_mc(a.clone(), cli.seed),
        Command::Fit(a) => config::resolve_fit(a.clone()),
        Command::Verify(a) => config::resolve_verify(a.clone()),
        Command::Rgflow(a) => config::resolve_rgflow(a.clone()),
    }
}

/// Runs a resolved experiment under `cli.out`.
pub fn execute(cfg: &ExperimentConfig, cli: &Cli) -> Result<Report, CliError> {
    if cli.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let out = cli.out.as_path();
    match cfg {
        ExperimentConfig::ExactDimer(c) => commands::exact::dimer(c, out),
        ExperimentConfig::ExactFormulas(c) => commands::exact::formulas(c, out),
        ExperimentConfig::Mc(c) => commands::mc::run(c, out, cli.threads),
        ExperimentConfig::Fit(c) => commands::fit::run(c, out),
        ExperimentConfig::Verify(c) => commands::verify::run(c, out),
        ExperimentConfig::Rgflow(c) => commands::rgflow::run(c, out),
    }
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    match resolve(cli).and_then(|cfg| execute(&cfg, cli)) {
        Ok(report) => {
            print!("{}", report.summary);
            println!("record: {}", report.record_path.display());
            if report.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
