//! The polynomial-model-based optimization loop.
//!
//! Each step adds the frontier multi-index whose unisolvent node minimises
//! the acquisition, evaluates the objective there, optionally evaluates the
//! minimizer of the current surrogate, and refits everything.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{gamma_at, select_next_index, AcquisitionConfig};
use crate::baselines::{cmaes_evaluations, CmaesState, INITIAL_SIGMA};
use crate::benchmarks::Objective;
use crate::multiindex::{DegreeNorm, MultiIndexSet};
use crate::sampling::{
    chebyshev_seed, random_uniform_points, sobol_points, uniform_points_with, GeneratingNodes,
    SeedConfig, SeedStrategy, DEFAULT_NODE_DEGREE,
};
use crate::surrogate::{
    bootstrap_fit, fit_with_fallback, BootstrapEnsemble, PolynomialSurrogate, SampleSet,
};
use crate::trace::{Origin, RunTrace, TerminationReason};
use crate::{Error, Result};

/// Points closer than this to an existing sample are not re-evaluated.
pub const DUPLICATE_RADIUS: f64 = 1e-9;
/// Target ratio of seed size to initial basis size.
pub const OVERSAMPLING: f64 = 1.5;

const PGD_MAX_ITERATIONS: usize = 200;
const PGD_TOLERANCE: f64 = 1e-9;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PmboConfig {
    pub seed: SeedConfig,
    /// Total degree of the initial index set; derived from the seed size when unset.
    pub initial_degree_cap: Option<u32>,
    pub degree_norm: DegreeNorm,
    pub acquisition: AcquisitionConfig,
    pub bootstrap_b: usize,
    pub ridge: f64,
    pub exploit_model_optimum: bool,
    pub minimize_restarts: usize,
    pub max_evaluations: usize,
    pub convergence_tol: f64,
    pub convergence_patience: usize,
    /// `K` of the generating-node sequence.
    pub node_degree: u32,
    pub rng_seed: u64,
}

impl Default for PmboConfig {
    fn default() -> Self {
        Self {
            seed: SeedConfig::default(),
            initial_degree_cap: None,
            degree_norm: DegreeNorm::L1,
            acquisition: AcquisitionConfig::default(),
            bootstrap_b: 20,
            ridge: 0.0,
            exploit_model_optimum: true,
            minimize_restarts: 16,
            max_evaluations: 300,
            convergence_tol: 1e-8,
            convergence_patience: 30,
            node_degree: DEFAULT_NODE_DEGREE,
            rng_seed: 0,
        }
    }
}

impl PmboConfig {
    /// Default configuration with both RNG seeds set to `rng_seed`.
    pub fn with_seed(strategy: SeedStrategy, rng_seed: u64) -> Self {
        Self {
            seed: SeedConfig {
                strategy,
                rng_seed,
                ..SeedConfig::default()
            },
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed.size == 0 {
            return Err(Error::Config("seed size must be at least 1".into()));
        }
        if self.max_evaluations < self.seed.size {
            return Err(Error::Config(format!(
                "max_evaluations ({}) must not be below the seed size ({})",
                self.max_evaluations, self.seed.size
            )));
        }
        if self.bootstrap_b == 0 {
            return Err(Error::Config("bootstrap_B must be at least 1".into()));
        }
        if self.ridge.is_nan() || self.ridge < 0.0 {
            return Err(Error::Config("ridge must be non-negative".into()));
        }
        if self.minimize_restarts == 0 {
            return Err(Error::Config("minimize_restarts must be at least 1".into()));
        }
        self.acquisition.validate()
    }

    /// Initial total degree: the configured cap, or the largest `n` with
    /// `binom(m + n, n) ≤ ⌊size / 1.5⌋`.
    pub fn degree_cap(&self, dim: usize) -> u32 {
        self.initial_degree_cap
            .unwrap_or_else(|| default_degree_cap(dim, self.seed.size))
    }

    fn planned_steps(&self) -> usize {
        let per_step = if self.exploit_model_optimum { 2 } else { 1 };
        self.max_evaluations
            .saturating_sub(self.seed.size)
            .div_ceil(per_step)
    }
}

/// Largest `n` whose total-degree set in `dim` dimensions has at most
/// `⌊seed_size / 1.5⌋` members (0 if even the constant is too many).
pub fn default_degree_cap(dim: usize, seed_size: usize) -> u32 {
    let limit = (seed_size as f64 / OVERSAMPLING).floor() as u128;
    let size = |n: u32| binomial(dim as u128 + u128::from(n), u128::from(n));
    let mut n = 0;
    while size(n + 1) <= limit {
        n += 1;
    }
    n
}

fn binomial(n: u128, k: u128) -> u128 {
    (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
}

// Independent RNG streams derived from one run seed (splitmix64 finaliser).
fn derive_seed(base: u64, stream: u64, counter: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(counter.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_BOOTSTRAP: u64 = 1;
const STREAM_MINIMIZE: u64 = 2;

/// Everything the loop carries between steps.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    samples: SampleSet,
    indices: MultiIndexSet,
    nodes: GeneratingNodes,
    surrogate: PolynomialSurrogate,
    ensemble: BootstrapEnsemble,
    best: (Vec<f64>, f64),
    iteration: usize,
}

/// New evaluations made by one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub frontier_evaluated: bool,
    pub exploit_evaluated: bool,
}

impl StepOutcome {
    pub fn evaluations(&self) -> usize {
        usize::from(self.frontier_evaluated) + usize::from(self.exploit_evaluated)
    }
}

impl OptimizerState {
    /// Draws and evaluates the seed, then fits the initial surrogate and ensemble.
    pub fn initialize(objective: &Objective, config: &PmboConfig) -> Result<Self> {
        config.validate()?;
        let m = objective.dimension();
        let nodes = GeneratingNodes::leja_chebyshev(config.node_degree);
        let size = config.seed.size;

        let evaluated: Vec<(Vec<f64>, f64)> = match config.seed.strategy {
            SeedStrategy::Cmaes => {
                let mut cma = CmaesState::new(vec![0.0; m], INITIAL_SIGMA)?;
                cmaes_evaluations(objective, &mut cma, size, config.seed.rng_seed)?
                    .into_iter()
                    .map(|(x, f, _)| (x, f))
                    .collect()
            }
            strategy => {
                let points = match strategy {
                    SeedStrategy::Random => random_uniform_points(m, size, config.seed.rng_seed),
                    SeedStrategy::Chebyshev => chebyshev_seed(m, size, &nodes)?,
                    SeedStrategy::Sobol => sobol_points(m, size)?,
                    SeedStrategy::Cmaes => unreachable!(),
                };
                points
                    .into_iter()
                    .map(|x| objective.eval_unit(&x).map(|f| (x, f)))
                    .collect::<Result<_>>()?
            }
        };

        let mut samples = SampleSet::new(m);
        for (x, f) in evaluated {
            samples.push(x, f, Origin::Seed)?;
        }
        let indices = MultiIndexSet::total_degree(m, config.degree_cap(m), config.degree_norm)?;
        let surrogate = fit_with_fallback(&samples, &indices, &nodes, config.ridge)?;
        let ensemble = bootstrap_fit(
            &samples,
            &indices,
            &nodes,
            config.bootstrap_b,
            derive_seed(config.rng_seed, STREAM_BOOTSTRAP, 0),
            config.ridge,
        )?;
        let best = incumbent(&samples);
        Ok(Self {
            samples,
            indices,
            nodes,
            surrogate,
            ensemble,
            best,
            iteration: 0,
        })
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn indices(&self) -> &MultiIndexSet {
        &self.indices
    }

    pub fn nodes(&self) -> &GeneratingNodes {
        &self.nodes
    }

    pub fn surrogate(&self) -> &PolynomialSurrogate {
        &self.surrogate
    }

    pub fn ensemble(&self) -> &BootstrapEnsemble {
        &self.ensemble
    }

    /// `(x_best, f_best)`; the first sample attaining the minimum.
    pub fn incumbent(&self) -> (&[f64], f64) {
        (&self.best.0, self.best.1)
    }

    pub fn evaluations_used(&self) -> usize {
        self.samples.len()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// One enlargement step. Returns [`Error::FrontierExhausted`] when no
    /// frontier index has a generating node.
    pub fn step(&mut self, objective: &Objective, config: &PmboConfig) -> Result<StepOutcome> {
        let budget = config.max_evaluations;
        let mut outcome = StepOutcome {
            frontier_evaluated: false,
            exploit_evaluated: false,
        };
        if self.samples.len() >= budget {
            return Ok(outcome);
        }

        let gamma = gamma_at(&config.acquisition, self.iteration, config.planned_steps());
        let (alpha, node) = select_next_index(&self.indices, &self.nodes, &self.ensemble, gamma)?;
        // A node already sampled (e.g. by a grid seed) keeps its value.
        if !self.samples.has_point_near(&node, DUPLICATE_RADIUS) {
            let f = objective.eval_unit(&node)?;
            self.samples.push(node, f, Origin::Frontier)?;
            outcome.frontier_evaluated = true;
        }
        self.indices.insert(alpha)?;

        if config.exploit_model_optimum && self.samples.len() < budget {
            let x_hat = surrogate_minimize(
                &self.surrogate,
                config.minimize_restarts,
                derive_seed(config.rng_seed, STREAM_MINIMIZE, self.iteration as u64),
            );
            if !self.samples.has_point_near(&x_hat, DUPLICATE_RADIUS) {
                let f = objective.eval_unit(&x_hat)?;
                self.samples.push(x_hat, f, Origin::Exploit)?;
                outcome.exploit_evaluated = true;
            }
        }

        self.surrogate =
            fit_with_fallback(&self.samples, &self.indices, &self.nodes, config.ridge)?;
        self.ensemble = bootstrap_fit(
            &self.samples,
            &self.indices,
            &self.nodes,
            config.bootstrap_b,
            derive_seed(config.rng_seed, STREAM_BOOTSTRAP, self.iteration as u64 + 1),
            config.ridge,
        )?;
        self.best = incumbent(&self.samples);
        self.iteration += 1;
        Ok(outcome)
    }

    fn into_trace(self, reason: TerminationReason) -> RunTrace {
        let mut trace = RunTrace::from_evaluations(
            self.samples
                .samples()
                .iter()
                .map(|s| (s.x.clone(), s.f, s.origin)),
            reason,
        );
        trace.surrogate = Some(self.surrogate);
        trace
    }
}

fn incumbent(samples: &SampleSet) -> (Vec<f64>, f64) {
    let mut best: Option<&crate::surrogate::Sample> = None;
    for s in samples.samples() {
        if best.is_none_or(|b| s.f < b.f) {
            best = Some(s);
        }
    }
    best.map(|s| (s.x.clone(), s.f))
        .unwrap_or((Vec::new(), f64::INFINITY))
}

// Projected gradient descent with halving backtracking from step 1.
fn projected_descent(q: &PolynomialSurrogate, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut scratch = Vec::new();
    let mut x = start;
    let mut y = x.clone();
    let mut fx = q.evaluate_with(&x, &mut scratch);
    for _ in 0..PGD_MAX_ITERATIONS {
        let g = q.gradient(&x);
        let pg_norm = x
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - (a - b).clamp(-1.0, 1.0)).powi(2))
            .sum::<f64>()
            .sqrt();
        if pg_norm <= PGD_TOLERANCE {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-16 {
            for ((yi, xi), gi) in y.iter_mut().zip(&x).zip(&g) {
                *yi = (xi - t * gi).clamp(-1.0, 1.0);
            }
            let fy = q.evaluate_with(&y, &mut scratch);
            let decrease: f64 = g
                .iter()
                .zip(x.iter().zip(&y))
                .map(|(gi, (a, b))| gi * (a - b))
                .sum();
            if fy <= fx - ARMIJO * decrease {
                accepted = Some(fy);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(fy) => {
                std::mem::swap(&mut x, &mut y);
                fx = fy;
            }
            None => break,
        }
    }
    (x, fx)
}

/// Minimizer of `q` over the cube by multistart projected gradient descent.
///
/// Starts from the unisolvent node of `q`'s index set with the lowest value
/// plus `restarts - 1` uniform points; returns the lowest point seen.
pub fn surrogate_minimize(q: &PolynomialSurrogate, restarts: usize, rng_seed: u64) -> Vec<f64> {
    let mut starts = Vec::with_capacity(restarts.max(1));
    let best_node = q
        .indices()
        .iter()
        .filter_map(|alpha| q.nodes().node_for_index(alpha).ok())
        .map(|p| {
            let v = q.evaluate(&p);
            (p, v)
        })
        .fold(None::<(Vec<f64>, f64)>, |acc, (p, v)| match acc {
            Some((bp, bv)) if bv <= v => Some((bp, bv)),
            _ => Some((p, v)),
        });
    if let Some((p, _)) = best_node {
        starts.push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    starts.extend(uniform_points_with(
        &mut rng,
        q.dimension(),
        restarts.saturating_sub(1),
    ));

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let f_start = q.evaluate(&start);
        let (x, fx) = projected_descent(q, start.clone());
        for (cand, val) in [(start, f_start), (x, fx)] {
            if best.as_ref().is_none_or(|(_, bv)| val < *bv) {
                best = Some((cand, val));
            }
        }
    }
    best.map(|(x, _)| x)
        .unwrap_or_else(|| vec![0.0; q.dimension()])
}

/// Runs until the budget is spent or the incumbent stalls.
pub fn run(objective: &Objective, config: &PmboConfig) -> Result<RunTrace> {
    let mut state = OptimizerState::initialize(objective, config)?;
    let seed_len = state.evaluations_used();
    let reason = loop {
        let n = state.evaluations_used();
        if n >= config.max_evaluations {
            break TerminationReason::Budget;
        }
        if stalled(
            &state.samples,
            seed_len,
            config.convergence_patience,
            config.convergence_tol,
        ) {
            break TerminationReason::Converged;
        }
        match state.step(objective, config) {
            Ok(_) => {}
            Err(Error::FrontierExhausted) => break TerminationReason::Budget,
            Err(e) => return Err(e),
        }
    };
    Ok(state.into_trace(reason))
}

// Improvement of the running minimum over the last `patience` evaluations,
// counted only once that many evaluations followed the seed.
fn stalled(samples: &SampleSet, seed_len: usize, patience: usize, tol: f64) -> bool {
    let n = samples.len();
    if patience == 0 || n < seed_len + patience {
        return false;
    }
    let values = samples.samples();
    let best_before = values[..n - patience]
        .iter()
        .map(|s| s.f)
        .fold(f64::INFINITY, f64::min);
    let best_now = values[n - patience..]
        .iter()
        .map(|s| s.f)
        .fold(best_before, f64::min);
    best_before - best_now < tol
}
