//! `pilab`: fit a study table and report prediction intervals, or run
//! coverage simulations.

mod fit;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "pilab",
    version,
    about = "Prediction intervals for random-effects meta-analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a study table and report pooled estimates and prediction intervals
    Fit {
        /// CSV with columns study_id,effect,se (or var)
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated method slugs or labels, or `all`
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Bootstrap seed; drawn from system entropy and reported when absent
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "bootstrap-b", default_value_t = pilab_core::interval::DEFAULT_BOOTSTRAP_DRAWS)]
        bootstrap_b: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the simulation grid described by a JSON config
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Show the resolved scenario grid
    Grid {
        /// Print one CSV line per scenario
        #[arg(long)]
        print: bool,
        /// Config to resolve; the default grid when absent
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit {
            input,
            methods,
            level,
            seed,
            bootstrap_b,
            format,
            out,
        } => fit::run(fit::FitArgs {
            input,
            methods,
            level,
            seed,
            bootstrap_b,
            format,
            out,
        })
        .map(|()| true),
        Command::Simulate {
            config,
            out_dir,
            jobs,
            seed,
        } => simulate::run(&config, &out_dir, jobs, seed),
        Command::Grid { print, config } => simulate::grid(config.as_deref(), print).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
