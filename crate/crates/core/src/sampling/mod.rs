//! Generating nodes, the index-to-node map, and seed designs.

mod sobol;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::multiindex::{first_indices, MultiIndex};
use crate::{Error, Result};

pub use sobol::{Sobol, MAX_DIMENSION as SOBOL_MAX_DIMENSION};

/// Default number of Chebyshev–Lobatto intervals (`K`), giving 128 nodes.
pub const DEFAULT_NODE_DEGREE: u32 = 127;

/// A nested 1D node sequence `(g_0, …, g_K)` in `[-1, 1]`.
///
/// Multidimensional unisolvent nodes are built coordinate-wise from it:
/// index `α` maps to `(g_{α_1}, …, g_{α_m})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneratingNodes {
    nodes: Vec<f64>,
}

impl GeneratingNodes {
    /// Chebyshev–Lobatto points `cos(jπ/K)` in greedy Leja order, starting at 1.
    ///
    /// Each subsequent node maximises the product of distances to the nodes
    /// already chosen; ties go to the smaller value.
    pub fn leja_chebyshev(k: u32) -> Self {
        if k == 0 {
            return Self { nodes: vec![0.0] };
        }
        let kf = f64::from(k);
        let mut remaining: Vec<f64> = (0..=k)
            .map(|j| (f64::from(j) * std::f64::consts::PI / kf).cos())
            .collect();
        // cos(jπ/K) for j = 0 is exactly 1.
        let mut nodes = vec![remaining.remove(0)];
        // Running log-products avoid underflow for long sequences.
        let mut log_prod: Vec<f64> = remaining
            .iter()
            .map(|&x| (x - nodes[0]).abs().ln())
            .collect();
        while !remaining.is_empty() {
            let mut best = 0;
            for i in 1..remaining.len() {
                let diff = log_prod[i] - log_prod[best];
                let tie = diff.abs() <= 1e-12 * log_prod[best].abs().max(1.0);
                if (!tie && diff > 0.0) || (tie && remaining[i] < remaining[best]) {
                    best = i;
                }
            }
            let chosen = remaining.swap_remove(best);
            log_prod.swap_remove(best);
            for (lp, &x) in log_prod.iter_mut().zip(&remaining) {
                *lp += (x - chosen).abs().ln();
            }
            nodes.push(chosen);
        }
        Self { nodes }
    }

    /// Wraps an explicit node sequence, checking range and distinctness.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Config("generating node sequence is empty".into()));
        }
        if nodes.iter().any(|g| !(-1.0..=1.0).contains(g)) {
            return Err(Error::Config("generating nodes must lie in [-1, 1]".into()));
        }
        for (i, a) in nodes.iter().enumerate() {
            if nodes[..i].contains(a) {
                return Err(Error::Config("generating nodes must be distinct".into()));
            }
        }
        Ok(Self { nodes })
    }

    /// Largest usable exponent `K`.
    pub fn max_exponent(&self) -> u32 {
        (self.nodes.len() - 1) as u32
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn get(&self, k: u32) -> Option<f64> {
        self.nodes.get(k as usize).copied()
    }

    /// The unisolvent node `p_α = (g_{α_1}, …, g_{α_m})`.
    pub fn node_for_index(&self, alpha: &MultiIndex) -> Result<Vec<f64>> {
        alpha
            .exponents()
            .iter()
            .map(|&e| {
                self.get(e).ok_or(Error::ExponentTooLarge {
                    exponent: e,
                    max: self.max_exponent(),
                })
            })
            .collect()
    }
}

impl Default for GeneratingNodes {
    fn default() -> Self {
        Self::leja_chebyshev(DEFAULT_NODE_DEGREE)
    }
}

/// How the initial sample is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedStrategy {
    Random,
    Chebyshev,
    Sobol,
    Cmaes,
}

impl SeedStrategy {
    pub fn name(self) -> &'static str {
        match self {
            SeedStrategy::Random => "random",
            SeedStrategy::Chebyshev => "chebyshev",
            SeedStrategy::Sobol => "sobol",
            SeedStrategy::Cmaes => "cmaes",
        }
    }
}

impl std::str::FromStr for SeedStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SeedStrategy::Random),
            "chebyshev" => Ok(SeedStrategy::Chebyshev),
            "sobol" => Ok(SeedStrategy::Sobol),
            "cmaes" => Ok(SeedStrategy::Cmaes),
            other => Err(Error::Config(format!("unknown seed strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub strategy: SeedStrategy,
    pub size: usize,
    pub rng_seed: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            strategy: SeedStrategy::Chebyshev,
            size: 50,
            rng_seed: 0,
        }
    }
}

/// `n` i.i.d. uniform points in `[-1, 1]^m`.
pub fn random_uniform_points(m: usize, n: usize, rng_seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    uniform_points_with(&mut rng, m, n)
}

pub(crate) fn uniform_points_with<R: Rng>(rng: &mut R, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// First `n` points of the Sobol sequence (index 0 skipped), mapped to `[-1, 1]^m`.
pub fn sobol_points(m: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    Ok(Sobol::new(m)?
        .take(n)
        .map(|p| p.into_iter().map(|u| 2.0 * u - 1.0).collect())
        .collect())
}

/// Unisolvent nodes of the first `n` multi-indices of `ℕ^m` in graded-lex order.
pub fn chebyshev_seed(m: usize, n: usize, gen: &GeneratingNodes) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::Config(
            "chebyshev seed needs at least one point".into(),
        ));
    }
    first_indices(m, n)?
        .iter()
        .map(|alpha| gen.node_for_index(alpha))
        .collect()
}
