//! `ottr`: train, evaluate, sweep and certify trust-region policy optimization runs.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 on numerical failure or a failed check.
//! Errors go to stderr as `E[Code]: message`.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::verify::Theorem;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ottr", version, about = "Wasserstein and Sinkhorn trust-region policy optimization")]
struct Cli {
    /// Print more detail (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one run and write log.csv, summary.json, policy.json and config.toml.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed and OTTR_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Overwrite an existing run directory.
        #[arg(long)]
        force: bool,
    },
    /// Roll out a saved policy and report undiscounted returns.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train every (value, seed) pair along one axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// beta_setting, lambda or n_a_cap.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        /// Worker threads; all logical processors when absent.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Check a theorem's inequalities against a finished run.
    Verify {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum)]
        theorem: Theorem,
        /// Entropic weight for t3.
        #[arg(long, default_value_t = 100.0)]
        lambda: f64,
        /// Trust-region radius shared by both updates in grid-compare.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Report path; defaults to verify_<theorem>.json inside the run.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve an optimal transport problem given as JSON {p, q, cost[, lambda]}.
    Ot {
        /// JSON file, or - for stdin.
        #[arg(long, default_value = "-")]
        input: PathBuf,
        /// Entropic weight; exact transport when absent.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Tabulate the dual objective of a problem as CSV, marking the solved multiplier.
    Dual {
        /// JSON file, or - for stdin.
        #[arg(long, default_value = "-")]
        problem: PathBuf,
        /// Entropic weight; the Wasserstein dual when absent.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        beta_max: Option<f64>,
    },
    /// Inspect the built-in environments.
    Envs {
        #[command(subcommand)]
        command: EnvsCommand,
    },
}

#[derive(Debug, Subcommand)]
enum EnvsCommand {
    /// One line per environment, or everything as JSON.
    List {
        #[arg(long)]
        json: bool,
    },
    /// The full environment, exact MDP included, as JSON.
    Show { name: String },
}

/// `Ok(false)` means the command ran but a check failed.
fn dispatch(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Train { config, out, seed, force } => commands::train::run(&config, &out, seed, force, cli.verbose)?,
        Command::Eval { policy, env, episodes, seed } => commands::eval::run(&policy, &env, episodes, seed)?,
        Command::Sweep { config, axis, values, seeds, jobs, out, force } => {
            commands::sweep::run(commands::sweep::SweepArgs {
                config: &config,
                axis: &axis,
                values: &values,
                seeds: &seeds,
                jobs,
                out: &out,
                force,
            })?
        }
        Command::Verify { run, theorem, lambda, delta, report } => {
            return commands::verify::run(&run, theorem, lambda, delta, report.as_deref())
        }
        Command::Ot { input, lambda, max_iter } => commands::tools::ot(&input, lambda, max_iter)?,
        Command::Dual { problem, lambda, points, beta_max } => commands::tools::dual(&problem, lambda, points, beta_max)?,
        Command::Envs { command: EnvsCommand::List { json } } => commands::tools::envs_list(json)?,
        Command::Envs { command: EnvsCommand::Show { name } } => commands::tools::envs_show(&name)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string());
            eprint!("E[{}]: {err}", err.code());
            return ExitCode::from(err.exit_code());
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("E[{}]: {e}", e.code());
            ExitCode::from(e.exit_code())
        }
    }
}
