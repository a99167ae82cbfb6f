//! Benchmark driver: runs every `(algorithm, repeat)` pair of an experiment,
//! writes one trace CSV per run, a JSON summary and an SVG convergence plot.
//!
//! Experiments are described by a flat TOML file:
//!
//! ```toml
//! objective = "hartmann3"
//! algorithms = ["pmbo-chebyshev", "random", "sobol"]
//! repeats = 5
//! max_evaluations = 300
//! seed_strategy = "chebyshev"   # used by plain "pmbo"
//! seed_size = 50
//! gamma = 0.5
//! bootstrap_B = 20
//! rng_seed = 0
//! out_dir = "results/hartmann3"
//! convergence_patience = 0      # 0 runs every PMBO variant to the budget
//! ```
//!
//! Repeat `r` uses RNG seed `rng_seed + r`. Runs may execute in parallel
//! (`PMBO_THREADS`, default 1) but files are written afterwards in run order.

mod aggregate;
mod output;
mod plot;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate, aggregate_curves, lower_median, pad_curve, AggregateResult, AlgorithmCurve, Band,
};
pub use output::{
    read_trace_csv, read_trace_dir, write_summary, write_trace_csv, RunSummary, Summary,
};
pub use plot::{emit_plot, render_svg};

use crate::baselines::{cmaes_run, random_search, sobol_search};
use crate::benchmarks::Objective;
use crate::optimizer::{self, PmboConfig};
use crate::sampling::{SeedConfig, SeedStrategy};
use crate::trace::RunTrace;
use crate::{Error, Result};

pub const THREADS_ENV: &str = "PMBO_THREADS";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "convergence.svg";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Pmbo(SeedStrategy),
    Random,
    Sobol,
    Cmaes,
}

impl Algorithm {
    /// Parses `pmbo`, `pmbo-<strategy>`, `random`, `sobol` or `cmaes`;
    /// plain `pmbo` uses `default_seed`.
    pub fn parse(name: &str, default_seed: SeedStrategy) -> Result<Self> {
        match name {
            "pmbo" => Ok(Algorithm::Pmbo(default_seed)),
            "random" => Ok(Algorithm::Random),
            "sobol" => Ok(Algorithm::Sobol),
            "cmaes" => Ok(Algorithm::Cmaes),
            other => other
                .strip_prefix("pmbo-")
                .and_then(|s| s.parse().ok())
                .map(Algorithm::Pmbo)
                .ok_or_else(|| Error::UnknownAlgorithm(other.to_string())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Algorithm::Pmbo(s) => format!("pmbo-{}", s.name()),
            Algorithm::Random => "random".into(),
            Algorithm::Sobol => "sobol".into(),
            Algorithm::Cmaes => "cmaes".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: String,
    pub algorithms: Vec<String>,
    pub repeats: usize,
    pub max_evaluations: usize,
    pub seed_strategy: SeedStrategy,
    pub seed_size: usize,
    pub gamma: f64,
    #[serde(rename = "bootstrap_B")]
    pub bootstrap_b: usize,
    pub rng_seed: u64,
    pub out_dir: PathBuf,
    /// Stall window for PMBO runs; 0 disables early stopping so every
    /// algorithm spends the same budget.
    pub convergence_patience: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let pmbo = PmboConfig::default();
        Self {
            objective: "hartmann3".into(),
            algorithms: vec!["pmbo".into()],
            repeats: 5,
            max_evaluations: pmbo.max_evaluations,
            seed_strategy: pmbo.seed.strategy,
            seed_size: pmbo.seed.size,
            gamma: pmbo.acquisition.gamma,
            bootstrap_b: pmbo.bootstrap_b,
            rng_seed: 0,
            out_dir: PathBuf::from("results"),
            convergence_patience: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Config("max_evaluations must be at least 1".into()));
        }
        let algorithms = self.parsed_algorithms()?;
        if algorithms.is_empty() {
            return Err(Error::Config("algorithm list is empty".into()));
        }
        let mut names: Vec<String> = algorithms.iter().map(Algorithm::name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(
                "algorithm list names the same variant twice".into(),
            ));
        }
        let objective = Objective::from_name(&self.objective)?;
        for a in &algorithms {
            if let Algorithm::Pmbo(s) = a {
                self.pmbo_config(*s, self.rng_seed).validate()?;
            }
            if *a == Algorithm::Cmaes {
                let lambda = crate::baselines::default_population(objective.dimension());
                if self.max_evaluations < lambda {
                    return Err(Error::Config(format!(
                        "cmaes needs max_evaluations >= {lambda}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn parsed_algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithms
            .iter()
            .map(|a| Algorithm::parse(a, self.seed_strategy))
            .collect()
    }

    /// Optimizer settings for one PMBO run.
    pub fn pmbo_config(&self, strategy: SeedStrategy, rng_seed: u64) -> PmboConfig {
        let mut config = PmboConfig {
            seed: SeedConfig {
                strategy,
                size: self.seed_size,
                rng_seed,
            },
            bootstrap_b: self.bootstrap_b,
            max_evaluations: self.max_evaluations,
            convergence_patience: self.convergence_patience,
            rng_seed,
            ..PmboConfig::default()
        };
        config.acquisition.gamma = self.gamma;
        config
    }
}

/// One algorithm on one objective with one seed.
pub fn run_algorithm(
    objective: &Objective,
    algorithm: Algorithm,
    config: &ExperimentConfig,
    rng_seed: u64,
) -> Result<RunTrace> {
    let budget = config.max_evaluations;
    match algorithm {
        Algorithm::Pmbo(s) => optimizer::run(objective, &config.pmbo_config(s, rng_seed)),
        Algorithm::Random => random_search(objective, budget, rng_seed),
        Algorithm::Sobol => sobol_search(objective, budget),
        Algorithm::Cmaes => cmaes_run(objective, budget, rng_seed),
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_id: String,
    pub algorithm: String,
    pub repeat: usize,
    pub rng_seed: u64,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<RunResult>,
    pub aggregate: AggregateResult,
}

impl ExperimentOutput {
    /// Final best values of every run of `algorithm`, in repeat order.
    pub fn final_bests(&self, algorithm: &str) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .filter_map(|r| r.trace.final_best())
            .collect()
    }

    pub fn median_final_best(&self, algorithm: &str) -> Option<f64> {
        lower_median(&self.final_bests(algorithm))
    }
}

fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer"))),
        Err(_) => Ok(1),
    }
}

/// Runs every configured run without writing files.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let objective = Objective::from_name(&config.objective)?;
    objective.verify_known_optimum()?;
    let algorithms = config.parsed_algorithms()?;
    let jobs: Vec<(Algorithm, usize)> = algorithms
        .iter()
        .flat_map(|&a| (0..config.repeats).map(move |r| (a, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let runs: Vec<RunResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(algorithm, repeat)| {
                let rng_seed = config.rng_seed + repeat as u64;
                let trace = run_algorithm(&objective, algorithm, config, rng_seed)?;
                Ok(RunResult {
                    run_id: format!("{}_r{repeat}", algorithm.name()),
                    algorithm: algorithm.name(),
                    repeat,
                    rng_seed,
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut curves = Vec::new();
    for algorithm in &algorithms {
        let name = algorithm.name();
        // Runs that stopped on convergence keep their final value.
        let padded: Vec<Vec<f64>> = runs
            .iter()
            .filter(|r| r.algorithm == name)
            .map(|r| pad_curve(&r.trace.best_curve(), config.max_evaluations))
            .collect();
        curves.push(AlgorithmCurve {
            runs: padded.len(),
            band: aggregate_curves(&padded)?,
            algorithm: name,
        });
    }
    Ok(ExperimentOutput {
        runs,
        aggregate: AggregateResult {
            objective: objective.name().to_string(),
            curves,
        },
    })
}

/// Runs the experiment and writes per-run CSVs, `summary.json` and
/// `convergence.svg` into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;
    let output = execute(config)?;
    let objective = Objective::from_name(&config.objective)?;
    for run in &output.runs {
        let file = std::fs::File::create(config.out_dir.join(format!("{}.csv", run.run_id)))?;
        write_trace_csv(file, &run.run_id, &run.algorithm, &run.trace)?;
    }
    write_summary(
        &config.out_dir.join(SUMMARY_FILE),
        &Summary::new(config, &objective, &output),
    )?;
    emit_plot(&output.aggregate, &config.out_dir.join(PLOT_FILE))?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names() {
        let d = SeedStrategy::Sobol;
        assert_eq!(
            Algorithm::parse("pmbo", d).unwrap(),
            Algorithm::Pmbo(SeedStrategy::Sobol)
        );
        assert_eq!(
            Algorithm::parse("pmbo-cmaes", d).unwrap(),
            Algorithm::Pmbo(SeedStrategy::Cmaes)
        );
        assert_eq!(Algorithm::parse("cmaes", d).unwrap().name(), "cmaes");
        assert!(matches!(
            Algorithm::parse("pmbo-grid", d),
            Err(Error::UnknownAlgorithm(_))
        ));
        assert!(matches!(
            Algorithm::parse("nelder", d),
            Err(Error::UnknownAlgorithm(_))
        ));
    }

    #[test]
    fn parses_documented_keys() {
        let c = ExperimentConfig::from_toml(
            r#"
            objective = "himmelblau2"
            algorithms = ["pmbo", "random"]
            repeats = 2
            max_evaluations = 60
            seed_strategy = "sobol"
            seed_size = 20
            gamma = 0.25
            bootstrap_B = 5
            rng_seed = 11
            out_dir = "out"
            "#,
        )
        .unwrap();
        assert_eq!(c.bootstrap_b, 5);
        let p = c.pmbo_config(SeedStrategy::Sobol, 12);
        assert_eq!(p.seed.size, 20);
        assert_eq!(p.acquisition.gamma, 0.25);
        assert_eq!(p.rng_seed, 12);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "repeats = 0",
            "algorithms = []",
            "algorithms = [\"pmbo\", \"pmbo-chebyshev\"]",
            "objective = \"nope\"",
            "unknown_key = 1",
            "max_evaluations = 10",
            "gamma = 2.0",
        ] {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert!(err.is_config_error(), "{text}: {err}");
        }
    }
}
