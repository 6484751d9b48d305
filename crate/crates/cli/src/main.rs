//! `cagebo`: data generation, model training, optimization runs, plots and
//! plan evaluation.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 infeasible input,
//! 4 numerical failure, 1 anything else.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cagebo_core::Error;

#[derive(Parser)]
#[command(name = "cagebo", version, about = "Latent-space constrained Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `data_seed` for gen-data and `seeds` for optimize.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `method`.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset.
    GenData(Common),
    /// Train the (conditional) VAE on the dataset.
    TrainCvae(Common),
    /// Run the configured method for every seed.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Record elapsed seconds in traces and summaries.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Convergence figure from run directories, or a district map.
    Plot {
        /// Method directories or output roots containing them.
        dirs: Vec<PathBuf>,
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// SVG file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-zone workload report of a plan.
    EvalPlan {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(e) = err.chain().find_map(|e| e.downcast_ref::<Error>()) else {
        return 1;
    };
    match e {
        Error::InvalidConfig(_) | Error::UnknownName { .. } | Error::DimensionMismatch { .. } => 2,
        Error::ZoneTooLarge { .. } => 3,
        e if e.is_infeasible_input() => 3,
        e if e.is_numerical() => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(c) => commands::gen_data(&c),
        Command::TrainCvae(c) => commands::train_cvae(&c),
        Command::Optimize { common, wall_clock } => commands::optimize(&common, wall_clock),
        Command::Plot {
            dirs,
            instance,
            plan,
            out,
        } => commands::plot(&dirs, instance.as_deref(), plan.as_deref(), &out),
        Command::EvalPlan { instance, plan } => commands::eval_plan(&instance, &plan),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
