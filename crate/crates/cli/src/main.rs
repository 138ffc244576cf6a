//! `siting`: storage siting and sizing planner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use siting_core::planner::{
    format_evaluation, read_plan, run_count, run_evaluate, run_optimize, OptimizeOptions, PlanSource, PlannerError, Study,
};

#[derive(Parser)]
#[command(name = "siting", version, about = "Multi-objective siting and sizing of shared storage on radial feeders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for Pareto-optimal placements and write pareto.csv, pareto.json and progress.log.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Caps the number of evaluation workers.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the output directory in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluates one plan over the configured horizon.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// A row `site_1,..,site_k,size_1,..,size_k` or a pareto.csv file.
        #[arg(long)]
        plan: String,
        /// Data row to take when --plan is a file, counted from 1.
        #[arg(long, default_value_t = 1)]
        row: usize,
        /// Prints JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Prints the number of ways to place K units on N nodes.
    Count {
        #[arg(long)]
        nodes: u64,
        #[arg(long)]
        units: u64,
    },
}

fn run(cli: Cli) -> Result<(), PlannerError> {
    match cli.command {
        Command::Optimize {
            config,
            seed,
            threads,
            out,
        } => {
            let study = Study::load(&config)?;
            let opts = OptimizeOptions {
                seed,
                threads,
                out,
                execution: None,
            };
            let report = run_optimize(&study, &opts)?;
            println!(
                "{} Pareto points from {} evaluations written to {}",
                report.result.archive.len(),
                report.result.evaluations,
                report.output_dir.display()
            );
        }
        Command::Evaluate { config, plan, row, json } => {
            let study = Study::load(&config)?;
            let plan = read_plan(&study, &PlanSource::from_arg(&plan, row))?;
            let ev = run_evaluate(&study, &plan)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&ev).expect("plain data serialises"));
            } else {
                print!("{}", format_evaluation(&ev));
            }
        }
        Command::Count { nodes, units } => {
            let (exact, sci) = run_count(nodes, units)?;
            println!("{sci}");
            println!("{exact}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
