//! Per-evaluation run logs shared by every optimizer.

use serde::{Deserialize, Serialize};

use crate::surrogate::PolynomialSurrogate;

/// Why a point was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Part of the initial design.
    Seed,
    /// Unisolvent node of a newly added multi-index.
    Frontier,
    /// Minimizer of the current surrogate.
    Exploit,
    /// Drawn by a baseline optimizer.
    Baseline,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Seed => "seed",
            Origin::Frontier => "frontier",
            Origin::Exploit => "exploit",
            Origin::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "seed" => Ok(Origin::Seed),
            "frontier" => Ok(Origin::Frontier),
            "exploit" => Ok(Origin::Exploit),
            "baseline" => Ok(Origin::Baseline),
            other => Err(format!("unknown origin `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminationReason {
    Budget,
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based evaluation counter.
    pub eval_index: usize,
    /// Evaluated point in unit-cube coordinates.
    pub x: Vec<f64>,
    pub f: f64,
    pub best_so_far: f64,
    pub origin: Origin,
}

/// Everything one optimizer run evaluated, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub reason: TerminationReason,
    /// Final surrogate, for polynomial-model runs.
    pub surrogate: Option<PolynomialSurrogate>,
}

impl RunTrace {
    /// Builds a trace from evaluations in order, filling in `best_so_far`.
    pub fn from_evaluations<I>(evaluations: I, reason: TerminationReason) -> Self
    where
        I: IntoIterator<Item = (Vec<f64>, f64, Origin)>,
    {
        let mut best = f64::INFINITY;
        let records = evaluations
            .into_iter()
            .enumerate()
            .map(|(i, (x, f, origin))| {
                best = best.min(f);
                TraceRecord {
                    eval_index: i + 1,
                    x,
                    f,
                    best_so_far: best,
                    origin,
                }
            })
            .collect();
        Self {
            records,
            reason,
            surrogate: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_so_far).collect()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_so_far)
    }

    /// First record attaining the final best value.
    pub fn best_record(&self) -> Option<&TraceRecord> {
        let best = self.final_best()?;
        self.records.iter().find(|r| r.f == best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_so_far_is_running_minimum() {
        let t = RunTrace::from_evaluations(
            [3.0, 1.0, 2.0, 0.5]
                .into_iter()
                .map(|f| (vec![0.0], f, Origin::Baseline)),
            TerminationReason::Budget,
        );
        assert_eq!(t.best_curve(), vec![3.0, 1.0, 1.0, 0.5]);
        assert_eq!(t.records[3].eval_index, 4);
        assert_eq!(t.best_record().unwrap().eval_index, 4);
    }
}
