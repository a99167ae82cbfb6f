use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmbo::benchmarks::Objective;
use pmbo::harness::{self, Algorithm, ExperimentConfig};
use pmbo::sampling::SeedStrategy;

#[derive(Parser)]
#[command(
    name = "pmbo",
    version,
    about = "Polynomial-model-based blackbox optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one algorithm once and print its trace as CSV.
    Optimize {
        #[arg(long)]
        objective: String,
        #[arg(long)]
        algo: String,
        #[arg(long, default_value_t = 300)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot all trace CSVs of a results directory.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn optimize(
    objective: &str,
    algo: &str,
    budget: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> pmbo::Result<()> {
    let objective = Objective::from_name(objective)?;
    let algorithm = Algorithm::parse(algo, SeedStrategy::Chebyshev)?;
    let config = ExperimentConfig {
        objective: objective.name().to_string(),
        algorithms: vec![algorithm.name()],
        repeats: 1,
        max_evaluations: budget,
        rng_seed: seed,
        ..ExperimentConfig::default()
    };
    config.validate()?;
    let trace = harness::run_algorithm(&objective, algorithm, &config, seed)?;
    let run_id = format!("{}_s{seed}", algorithm.name());
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            harness::write_trace_csv(file, &run_id, &algorithm.name(), &trace)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            harness::write_trace_csv(&mut lock, &run_id, &algorithm.name(), &trace)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn dispatch(command: Command) -> pmbo::Result<()> {
    match command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let output = harness::run_experiment(&config)?;
            for curve in &output.aggregate.curves {
                let median = output
                    .median_final_best(&curve.algorithm)
                    .unwrap_or(f64::NAN);
                eprintln!("{:<16} median final best {median:.6e}", curve.algorithm);
            }
            eprintln!("results written to {}", config.out_dir.display());
            Ok(())
        }
        Command::Optimize {
            objective,
            algo,
            budget,
            seed,
            out,
        } => optimize(&objective, &algo, budget, seed, out),
        Command::Plot { input, out } => {
            let result = harness::read_trace_dir(&input)?;
            harness::emit_plot(&result, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
