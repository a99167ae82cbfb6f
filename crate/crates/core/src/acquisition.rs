//! Mean-minus-variance acquisition over frontier nodes.
//!
//! Lower values are better: a candidate scores well when the ensemble
//! predicts a low value there or disagrees strongly about it. `gamma` trades
//! the two off.

use serde::{Deserialize, Serialize};

use crate::multiindex::{MultiIndex, MultiIndexSet};
use crate::sampling::GeneratingNodes;
use crate::surrogate::BootstrapEnsemble;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaSchedule {
    #[default]
    Constant,
    LinearDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub gamma: f64,
    pub schedule: GammaSchedule,
    /// Final gamma for [`GammaSchedule::LinearDecay`].
    pub decay_end: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            schedule: GammaSchedule::Constant,
            decay_end: 0.0,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.decay_end) || self.decay_end > self.gamma {
            return Err(Error::Config(format!(
                "decay_end must lie in [0, gamma], got {}",
                self.decay_end
            )));
        }
        Ok(())
    }
}

/// `mean - gamma · var`.
pub fn acquisition_value(mean: f64, var: f64, gamma: f64) -> f64 {
    mean - gamma * var
}

/// Gamma in effect at `iteration` of `max_iterations`.
pub fn gamma_at(config: &AcquisitionConfig, iteration: usize, max_iterations: usize) -> f64 {
    match config.schedule {
        GammaSchedule::Constant => config.gamma,
        GammaSchedule::LinearDecay => {
            if max_iterations == 0 {
                return config.decay_end;
            }
            let frac = iteration.min(max_iterations) as f64 / max_iterations as f64;
            config.gamma + (config.decay_end - config.gamma) * frac
        }
    }
}

/// Frontier index whose node minimises the acquisition, with that node.
///
/// Candidates are visited in canonical order and only a strictly smaller
/// value replaces the incumbent, so ties go to the graded-lex smallest index.
pub fn select_next_index(
    indices: &MultiIndexSet,
    nodes: &GeneratingNodes,
    ensemble: &BootstrapEnsemble,
    gamma: f64,
) -> Result<(MultiIndex, Vec<f64>)> {
    let mut best: Option<(f64, MultiIndex, Vec<f64>)> = None;
    for beta in indices.frontier_bounded(nodes.max_exponent()) {
        let p = nodes.node_for_index(&beta)?;
        let (mean, var) = ensemble.mean_var(&p);
        let value = acquisition_value(mean, var, gamma);
        if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
            best = Some((value, beta, p));
        }
    }
    best.map(|(_, beta, p)| (beta, p))
        .ok_or(Error::FrontierExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::PolynomialSurrogate;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    #[test]
    fn acquisition_value_examples() {
        assert_eq!(acquisition_value(0.7, 3.0, 0.0), 0.7);
        assert_eq!(acquisition_value(2.0, 0.5, 1.0), 1.5);
        for gamma in [0.0, 0.3, 1.0] {
            assert_eq!(acquisition_value(2.0, 0.0, gamma), 2.0);
        }
    }

    #[test]
    fn gamma_schedules() {
        let constant = AcquisitionConfig {
            gamma: 0.5,
            ..Default::default()
        };
        assert_eq!(gamma_at(&constant, 17, 100), 0.5);
        let decay = AcquisitionConfig {
            gamma: 1.0,
            schedule: GammaSchedule::LinearDecay,
            decay_end: 0.0,
        };
        assert_eq!(gamma_at(&decay, 100, 100), 0.0);
        assert_eq!(gamma_at(&decay, 50, 100), 0.5);
        assert_eq!(gamma_at(&decay, 0, 100), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(AcquisitionConfig::default().validate().is_ok());
        let bad = AcquisitionConfig {
            gamma: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AcquisitionConfig {
            gamma: 0.2,
            schedule: GammaSchedule::LinearDecay,
            decay_end: 0.4,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_candidate_worked_example() {
        // f(x) = x in the Newton basis over (1, -1, 0): N_0 = 1, N_1 = x - 1.
        let g = GeneratingNodes::from_nodes(vec![1.0, -1.0, 0.0]).unwrap();
        let a = MultiIndexSet::from_indices(vec![mi(&[0]), mi(&[1])]).unwrap();
        let q = PolynomialSurrogate::new(a.clone(), g.clone(), vec![1.0, 1.0]).unwrap();
        assert_eq!(q.evaluate(&[0.25]), 0.25);
        let e = BootstrapEnsemble::from_members(vec![q]).unwrap();
        let (beta, p) = select_next_index(&a, &g, &e, 0.0).unwrap();
        assert_eq!(beta, mi(&[2]));
        assert_eq!(p, vec![0.0]);
    }

    #[test]
    fn ties_go_to_smallest_index() {
        let g = GeneratingNodes::default();
        let a = MultiIndexSet::from_indices(vec![mi(&[0, 0])]).unwrap();
        let q = PolynomialSurrogate::new(a.clone(), g.clone(), vec![2.0]).unwrap();
        let e = BootstrapEnsemble::from_members(vec![q]).unwrap();
        let (beta, _) = select_next_index(&a, &g, &e, 0.5).unwrap();
        assert_eq!(beta, mi(&[0, 1]));
    }

    #[test]
    fn exhausted_frontier_is_an_error() {
        let g = GeneratingNodes::from_nodes(vec![1.0, -1.0]).unwrap();
        let a = MultiIndexSet::from_indices(vec![mi(&[0]), mi(&[1])]).unwrap();
        let q = PolynomialSurrogate::new(a.clone(), g.clone(), vec![0.0, 1.0]).unwrap();
        let e = BootstrapEnsemble::from_members(vec![q]).unwrap();
        assert!(matches!(
            select_next_index(&a, &g, &e, 0.5),
            Err(Error::FrontierExhausted)
        ));
    }
}
