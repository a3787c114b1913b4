// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod build;
mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use config::{parse_config, read_config, validate};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gencoupling", version, about = "Coupling experiments for dissipative stochastic systems")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, env = "GENCOUPLING_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides `seeds.master_seed`.
    #[arg(long, global = true, env = "GENCOUPLING_SEED")]
    seed: Option<u64>,
    /// Size of the worker pool; results do not depend on it.
    #[arg(long, global = true, env = "GENCOUPLING_WORKERS")]
    workers: Option<usize>,
    /// Overrides `output.directory`.
    #[arg(long, global = true, env = "GENCOUPLING_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive the rate certificate from constants or Navier–Stokes parameters.
    Certify,
    /// Run a coupled ensemble and write per-run CSVs and a summary.
    Couple,
    /// Evaluate the TV and measure-transfer bounds listed in `[bounds]`.
    Bounds,
    /// Exact transport distance between terminal laws from the two initial states.
    Wasserstein,
    /// Monte-Carlo hitting probabilities of a ball around the origin.
    Hitprob,
    /// Tabulate the artifacts found in a run directory.
    Report {
        /// Artifact directory; defaults to `--out` or the configured output directory.
        dir: Option<PathBuf>,
    },
}

fn load(cli: &Cli) -> Result<Context, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required for this command"))?;
    let text = read_config(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| {
        CliError::config(format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message))
    })?;
    let mut errs = validate(&cfg);
    let model = match &cfg.model {
        Some(m) => match build::build(m) {
            Ok(b) => Some(b),
            Err(e) => {
                errs.extend(e);
                None
            }
        },
        None => None,
    };
    if !errs.is_empty() {
        return Err(CliError::Config(errs));
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    Ok(Context {
        seed: cli.seed.unwrap_or(cfg.seeds.master_seed),
        workers: cli.workers,
        out,
        model,
        cfg,
    })
}

fn report_dir(cli: &Cli, dir: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    if let Some(d) = dir.as_ref().or(cli.out.as_ref()) {
        return Ok(d.clone());
    }
    match &cli.config {
        Some(_) => Ok(load(cli)?.out),
        None => Ok(PathBuf::from("out")),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Report { dir } => {
            print!("{}", commands::report::report(&report_dir(cli, dir)?)?);
            Ok(())
        }
        Command::Certify => commands::certify::run(&load(cli)?).map(drop),
        Command::Couple => commands::couple::run(&load(cli)?).map(drop),
        Command::Bounds => commands::bounds::run(&load(cli)?).map(drop),
        Command::Wasserstein => commands::wasserstein::run(&load(cli)?).map(drop),
        Command::Hitprob => commands::hitprob::run(&load(cli)?).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
