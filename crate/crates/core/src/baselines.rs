//! Reference optimizers: random search, Sobol search and CMA-ES.
//!
//! CMA-ES follows the standard (μ/μ_w, λ) formulation with cumulative
//! step-size adaptation and rank-one plus rank-μ covariance updates. Samples
//! outside the cube are projected onto it coordinate-wise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::benchmarks::Objective;
use crate::sampling::{random_uniform_points, sobol_points};
use crate::trace::{Origin, RunTrace, TerminationReason};
use crate::{Error, Result};

/// Smallest eigenvalue kept in the covariance after each update.
pub const MIN_EIGENVALUE: f64 = 1e-20;
/// Initial step size in cube half-width units.
pub const INITIAL_SIGMA: f64 = 0.3;

fn evaluate_all(objective: &Objective, points: Vec<Vec<f64>>) -> Result<RunTrace> {
    let evals = points
        .into_iter()
        .map(|x| {
            let f = objective.eval_unit(&x)?;
            Ok((x, f, Origin::Baseline))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunTrace::from_evaluations(evals, TerminationReason::Budget))
}

pub fn random_search(objective: &Objective, budget: usize, rng_seed: u64) -> Result<RunTrace> {
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    evaluate_all(
        objective,
        random_uniform_points(objective.dimension(), budget, rng_seed),
    )
}

pub fn sobol_search(objective: &Objective, budget: usize) -> Result<RunTrace> {
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    evaluate_all(objective, sobol_points(objective.dimension(), budget)?)
}

/// Default population size `4 + ⌊3 ln m⌋`.
pub fn default_population(dim: usize) -> usize {
    4 + (3.0 * (dim as f64).ln()).floor() as usize
}

#[derive(Debug, Clone)]
pub struct CmaesState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub covariance: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub generation: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    chi_n: f64,
    // C = B diag(D²) Bᵀ, refreshed after every update.
    eigvecs: DMatrix<f64>,
    sqrt_eigvals: DVector<f64>,
}

impl CmaesState {
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let n = mean.len();
        Self::with_population(mean, sigma, default_population(n))
    }

    pub fn with_population(mean: Vec<f64>, sigma: f64, lambda: usize) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if sigma.is_nan() || sigma <= 0.0 || lambda < 2 {
            return Err(Error::Config(
                "CMA-ES needs sigma > 0 and lambda >= 2".into(),
            ));
        }
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu =
            (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        Ok(Self {
            mean: DVector::from_vec(mean),
            sigma,
            covariance: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            eigvecs: DMatrix::identity(n, n),
            sqrt_eigvals: DVector::from_element(n, 1.0),
        })
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    /// Draws `lambda` points `mean + σ C^{1/2} z`, projected onto the cube.
    pub fn ask<R: Rng>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        let n = self.dimension();
        (0..self.lambda)
            .map(|_| {
                let z =
                    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let y = &self.eigvecs * z.component_mul(&self.sqrt_eigvals);
                (&self.mean + y * self.sigma)
                    .iter()
                    .map(|v| v.clamp(-1.0, 1.0))
                    .collect()
            })
            .collect()
    }

    /// Updates the distribution from one evaluated generation.
    ///
    /// Ranking is stable: equal values keep their input order.
    pub fn tell(&mut self, points: &[Vec<f64>], values: &[f64]) -> Result<()> {
        if points.len() != self.lambda || values.len() != self.lambda {
            return Err(Error::Config(format!(
                "tell expects {} points and values",
                self.lambda
            )));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                point: points[i].clone(),
                value: v,
            });
        }
        let n = self.dimension();
        let nf = n as f64;
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

        let old_mean = self.mean.clone();
        let steps: Vec<DVector<f64>> = order[..self.mu]
            .iter()
            .map(|&k| (DVector::from_column_slice(&points[k]) - &old_mean) / self.sigma)
            .collect();
        let y_w = steps
            .iter()
            .zip(&self.weights)
            .fold(DVector::zeros(n), |acc, (y, &w)| acc + y * w);
        self.mean = &old_mean + &y_w * self.sigma;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let inv_sqrt_y =
            &self.eigvecs * (self.eigvecs.transpose() * &y_w).component_div(&self.sqrt_eigvals);
        self.p_sigma = &self.p_sigma * (1.0 - self.c_sigma)
            + inv_sqrt_y * (self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff).sqrt();

        let gen = (self.generation + 1) as i32;
        let ps_norm = self.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - self.c_sigma).powi(2 * gen)).sqrt()
            < (1.4 + 2.0 / (nf + 1.0)) * self.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.p_c = &self.p_c * (1.0 - self.c_c)
            + &y_w * (h * (self.c_c * (2.0 - self.c_c) * self.mu_eff).sqrt());

        let rank_one = &self.p_c * self.p_c.transpose();
        let rank_mu = steps
            .iter()
            .zip(&self.weights)
            .fold(DMatrix::zeros(n, n), |acc, (y, &w)| {
                acc + y * y.transpose() * w
            });
        let delta_h = (1.0 - h) * self.c_c * (2.0 - self.c_c);
        self.covariance = &self.covariance * (1.0 - self.c_1 - self.c_mu)
            + (rank_one + &self.covariance * delta_h) * self.c_1
            + rank_mu * self.c_mu;

        self.sigma *= ((self.c_sigma / self.d_sigma) * (ps_norm / self.chi_n - 1.0)).exp();
        self.sigma = self.sigma.clamp(f64::MIN_POSITIVE, 1e6);
        self.generation += 1;
        self.repair_covariance();
        Ok(())
    }

    fn repair_covariance(&mut self) {
        let sym = (&self.covariance + self.covariance.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let vals = eig.eigenvalues.map(|v| v.max(MIN_EIGENVALUE));
        let vecs = eig.eigenvectors;
        let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        self.covariance = (&rebuilt + rebuilt.transpose()) * 0.5;
        self.sqrt_eigvals = vals.map(f64::sqrt);
        self.eigvecs = vecs;
    }
}

/// Ask/tell generations until `budget` evaluations; a final partial
/// generation is evaluated but not told.
pub fn cmaes_run(objective: &Objective, budget: usize, rng_seed: u64) -> Result<RunTrace> {
    let m = objective.dimension();
    let mut state = CmaesState::new(vec![0.0; m], INITIAL_SIGMA)?;
    if budget < state.lambda {
        return Err(Error::Config(format!(
            "CMA-ES budget {budget} is below the population size {}",
            state.lambda
        )));
    }
    Ok(RunTrace::from_evaluations(
        cmaes_evaluations(objective, &mut state, budget, rng_seed)?,
        TerminationReason::Budget,
    ))
}

/// The first `count` CMA-ES evaluations, as used for seeding.
pub(crate) fn cmaes_evaluations(
    objective: &Objective,
    state: &mut CmaesState,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<(Vec<f64>, f64, Origin)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut evals = Vec::with_capacity(count);
    while evals.len() < count {
        let points = state.ask(&mut rng);
        let take = (count - evals.len()).min(points.len());
        let values = points[..take]
            .iter()
            .map(|x| objective.eval_unit(x))
            .collect::<Result<Vec<f64>>>()?;
        for (x, &f) in points[..take].iter().zip(&values) {
            evals.push((x.clone(), f, Origin::Baseline));
        }
        if take == points.len() {
            state.tell(&points, &values)?;
        }
    }
    Ok(evals)
}
