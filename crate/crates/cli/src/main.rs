//! `limitset` command line: dependence summaries, level sets, sampling,
//! estimation and simulation studies. Results go to CSV/JSON files.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 partial failure.

#![allow(clippy::needless_range_loop)]

mod commands;
mod grids;
mod model;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use model::ModelArgs;

#[derive(Parser, Debug)]
#[command(name = "limitset", version, about = "Limit sets of light-tailed sample clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Format of the report printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Run loops sequentially instead of on the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// lambda, eta, tau, alpha and beta of a gauge; writes summary.json and summary.csv.
    Summarize {
        #[command(flatten)]
        model: ModelArgs,
        /// `N` evenly spaced points of [0, 1], or a comma list.
        #[arg(long)]
        delta_grid: Option<String>,
        /// Simplex lattice denominator `N`, or `;`-separated points.
        #[arg(long)]
        omega_grid: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Discretized unit level set with lambda and eta overlays; writes levelset.csv.
    Levelset {
        #[command(flatten)]
        model: ModelArgs,
        /// Angular samples (d = 2) or lattice subdivisions per edge (d = 3).
        #[arg(long)]
        points: Option<usize>,
        /// Simplex lattice denominator `N`, or `;`-separated points, for the lambda overlay.
        #[arg(long)]
        omega_grid: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Draws a cloud; writes cloud-<family>-n<n>-seed<seed>.csv and its JSON sidecar.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report the cloud in Pareto instead of exponential margins.
        #[arg(long)]
        pareto: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Estimates from a stored cloud or a fresh sample; writes estimates.json.
    Estimate(commands::EstimateArgs),
    /// Batch of sample, estimate and compare cells; writes study.json.
    Study(commands::StudyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Summarize {
            model,
            delta_grid,
            omega_grid,
            output,
        } => commands::summarize(&model, delta_grid.as_deref(), omega_grid.as_deref(), &output),
        Command::Levelset {
            model,
            points,
            omega_grid,
            output,
        } => commands::levelset(&model, points, omega_grid.as_deref(), &output),
        Command::Sample {
            model,
            n,
            seed,
            pareto,
            output,
        } => commands::sample_cmd(&model, n, seed, pareto, &output),
        Command::Estimate(args) => commands::estimate(&args),
        Command::Study(args) => commands::study(&args),
    };
    match result {
        Ok(commands::Status::Complete) => ExitCode::SUCCESS,
        Ok(commands::Status::Partial(n)) => {
            eprintln!("{n} entries failed; see the output files");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
