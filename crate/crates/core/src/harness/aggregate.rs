use serde::{Deserialize, Serialize};

use crate::trace::RunTrace;
use crate::{Error, Result};

/// Element-wise median and min/max of several best-so-far curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub median: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Band {
    pub fn len(&self) -> usize {
        self.median.len()
    }

    pub fn is_empty(&self) -> bool {
        self.median.is_empty()
    }

    pub fn final_median(&self) -> Option<f64> {
        self.median.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmCurve {
    pub algorithm: String,
    pub runs: usize,
    #[serde(flatten)]
    pub band: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub objective: String,
    pub curves: Vec<AlgorithmCurve>,
}

impl AggregateResult {
    pub fn curve(&self, algorithm: &str) -> Option<&AlgorithmCurve> {
        self.curves.iter().find(|c| c.algorithm == algorithm)
    }
}

/// Lower-middle element for even counts, so no averaging happens.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

pub fn aggregate_curves(curves: &[Vec<f64>]) -> Result<Band> {
    let first = curves.first().ok_or(Error::EmptyResult)?;
    let len = first.len();
    if let Some(bad) = curves.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            got: bad.len(),
        });
    }
    let mut band = Band {
        median: Vec::with_capacity(len),
        min: Vec::with_capacity(len),
        max: Vec::with_capacity(len),
    };
    let mut column = Vec::with_capacity(curves.len());
    for i in 0..len {
        column.clear();
        column.extend(curves.iter().map(|c| c[i]));
        band.median.push(lower_median(&column).expect("non-empty"));
        band.min
            .push(column.iter().copied().fold(f64::INFINITY, f64::min));
        band.max
            .push(column.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(band)
}

/// Aggregates the best-so-far curves of equally long traces.
pub fn aggregate(traces: &[RunTrace]) -> Result<Band> {
    let curves: Vec<Vec<f64>> = traces.iter().map(RunTrace::best_curve).collect();
    aggregate_curves(&curves)
}

/// Extends a curve to `len` by repeating its last value.
pub fn pad_curve(curve: &[f64], len: usize) -> Vec<f64> {
    let mut out = curve.to_vec();
    if let Some(&last) = curve.last() {
        out.resize(len.max(curve.len()), last);
    }
    out
}
