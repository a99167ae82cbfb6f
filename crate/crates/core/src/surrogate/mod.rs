//! Polynomial surrogates in the Newton basis, fitted by least squares, and
//! bootstrap ensembles of them.
//!
//! The basis function of a multi-index `α` is
//! `N_α(x) = ∏_i ∏_{j<α_i} (x_i - g_j)` over the generating nodes `g`. For a
//! downward-closed set these span the same space as the monomials `x^α`, and
//! `N_α` vanishes at every unisolvent node `p_β` with some `β_i < α_i`, so
//! interpolation on the nodes of the set is always well posed.

mod lstsq;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::multiindex::MultiIndexSet;
use crate::sampling::GeneratingNodes;
use crate::trace::Origin;
use crate::{Error, Result};

pub use lstsq::RANK_TOLERANCE;

/// Ridge used when an unregularised fit turns out rank deficient.
pub const FALLBACK_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub f: f64,
    pub origin: Origin,
}

/// Append-only list of evaluated points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, x: Vec<f64>, f: f64, origin: Origin) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !f.is_finite() {
            return Err(Error::NonFiniteValue { point: x, value: f });
        }
        debug_assert!(
            x.iter().all(|v| (-1.0..=1.0).contains(v)),
            "{x:?} outside the cube"
        );
        self.samples.push(Sample { x, f, origin });
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.x.as_slice())
    }

    pub fn values(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.samples.iter().map(|s| s.f))
    }

    /// True if some sample lies within Euclidean distance `radius` of `x`.
    pub fn has_point_near(&self, x: &[f64], radius: f64) -> bool {
        let r2 = radius * radius;
        self.points()
            .any(|p| p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < r2)
    }
}

fn check_exponents(indices: &MultiIndexSet, nodes: &GeneratingNodes) -> Result<()> {
    if let Some(&e) = indices
        .max_exponents()
        .iter()
        .find(|&&e| e > nodes.max_exponent())
    {
        return Err(Error::ExponentTooLarge {
            exponent: e,
            max: nodes.max_exponent(),
        });
    }
    Ok(())
}

/// Evaluation plan for the Newton basis of a downward-closed set.
///
/// Indices are stored in canonical order, which starts at zero and lists
/// every predecessor before its successors, so each `N_α` is one product
/// away from an earlier entry: `N_α = N_{α - e_i} · (x_i - g_{α_i - 1})`.
#[derive(Debug, Clone, PartialEq)]
struct Basis {
    dim: usize,
    // (position of α - e_i, i, α_i - 1) for every α after the zero index.
    steps: Vec<(usize, usize, usize)>,
}

impl Basis {
    fn new(indices: &MultiIndexSet) -> Self {
        let steps = indices
            .iter()
            .skip(1)
            .map(|alpha| {
                let e = alpha.exponents();
                let i = e
                    .iter()
                    .rposition(|&v| v > 0)
                    .expect("only the first index is zero");
                let parent = alpha.predecessor(i).expect("positive exponent");
                let pos = indices.position(&parent).expect("downward closed");
                (pos, i, e[i] as usize - 1)
            })
            .collect();
        Self {
            dim: indices.dimension(),
            steps,
        }
    }

    fn len(&self) -> usize {
        self.steps.len() + 1
    }

    fn values_into(&self, x: &[f64], nodes: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(self.len());
        out.push(1.0);
        for &(p, i, j) in &self.steps {
            let v = out[p] * (x[i] - nodes[j]);
            out.push(v);
        }
    }

    fn values(&self, x: &[f64], nodes: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        self.values_into(x, nodes, &mut out);
        out
    }

    // Values and the row-major `len × dim` table of partial derivatives.
    fn values_and_gradients(&self, x: &[f64], nodes: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.dim;
        let mut vals = Vec::with_capacity(self.len());
        let mut grads = vec![0.0; self.len() * m];
        vals.push(1.0);
        for (k, &(p, i, j)) in self.steps.iter().enumerate() {
            let factor = x[i] - nodes[j];
            let parent_val = vals[p];
            vals.push(parent_val * factor);
            let (head, tail) = grads.split_at_mut((k + 1) * m);
            let parent = &head[p * m..(p + 1) * m];
            let row = &mut tail[..m];
            for (r, g) in row.iter_mut().zip(parent) {
                *r = g * factor;
            }
            row[i] += parent_val;
        }
        (vals, grads)
    }
}

/// `|points| × |A|` matrix with entries `N_α(points_i)`.
pub fn design_matrix(
    points: &[Vec<f64>],
    indices: &MultiIndexSet,
    nodes: &GeneratingNodes,
) -> Result<DMatrix<f64>> {
    check_exponents(indices, nodes)?;
    let basis = Basis::new(indices);
    let dim = indices.dimension();
    let mut d = DMatrix::zeros(points.len(), indices.len());
    let mut row = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        basis.values_into(p, nodes.nodes(), &mut row);
        for (j, &v) in row.iter().enumerate() {
            d[(i, j)] = v;
        }
    }
    Ok(d)
}

/// A polynomial `Q(x) = Σ_α c_α N_α(x)` over a downward-closed index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SurrogateJson", try_from = "SurrogateJson")]
pub struct PolynomialSurrogate {
    indices: MultiIndexSet,
    nodes: GeneratingNodes,
    coeffs: Vec<f64>,
    basis: Basis,
}

impl PolynomialSurrogate {
    pub fn new(indices: MultiIndexSet, nodes: GeneratingNodes, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != indices.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(
                "surrogate coefficients must be finite".into(),
            ));
        }
        check_exponents(&indices, &nodes)?;
        let basis = Basis::new(&indices);
        Ok(Self {
            indices,
            nodes,
            coeffs,
            basis,
        })
    }

    pub fn dimension(&self) -> usize {
        self.indices.dimension()
    }

    pub fn indices(&self) -> &MultiIndexSet {
        &self.indices
    }

    pub fn nodes(&self) -> &GeneratingNodes {
        &self.nodes
    }

    /// Newton coefficients in canonical index order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.evaluate_with(x, &mut Vec::new())
    }

    /// [`evaluate`](Self::evaluate) reusing `scratch` for the basis values.
    pub fn evaluate_with(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        self.basis.values_into(x, self.nodes.nodes(), scratch);
        scratch.iter().zip(&self.coeffs).map(|(b, c)| b * c).sum()
    }

    /// Exact partial derivatives.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_gradient(x).1
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.dimension();
        let (vals, grads) = self.basis.values_and_gradients(x, self.nodes.nodes());
        let mut grad = vec![0.0; m];
        let mut value = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            value += c * vals[k];
            for (g, d) in grad.iter_mut().zip(&grads[k * m..(k + 1) * m]) {
                *g += c * d;
            }
        }
        (value, grad)
    }
}

#[derive(Serialize, Deserialize)]
struct SurrogateJson {
    dimension: usize,
    multi_indices: MultiIndexSet,
    generating_nodes: GeneratingNodes,
    coefficients: Vec<f64>,
}

impl From<PolynomialSurrogate> for SurrogateJson {
    fn from(q: PolynomialSurrogate) -> Self {
        Self {
            dimension: q.dimension(),
            multi_indices: q.indices,
            generating_nodes: q.nodes,
            coefficients: q.coeffs,
        }
    }
}

impl TryFrom<SurrogateJson> for PolynomialSurrogate {
    type Error = Error;

    fn try_from(j: SurrogateJson) -> Result<Self> {
        if j.multi_indices.dimension() != j.dimension {
            return Err(Error::DimensionMismatch {
                expected: j.dimension,
                got: j.multi_indices.dimension(),
            });
        }
        Self::new(j.multi_indices, j.generating_nodes, j.coefficients)
    }
}

fn fit_design(
    design: &DMatrix<f64>,
    values: &DVector<f64>,
    indices: &MultiIndexSet,
    nodes: &GeneratingNodes,
    ridge: f64,
) -> Result<PolynomialSurrogate> {
    let coeffs = lstsq::solve(design, values, ridge)?;
    PolynomialSurrogate::new(indices.clone(), nodes.clone(), coeffs.as_slice().to_vec())
}

fn fit_design_with_fallback(
    design: &DMatrix<f64>,
    values: &DVector<f64>,
    indices: &MultiIndexSet,
    nodes: &GeneratingNodes,
    ridge: f64,
) -> Result<PolynomialSurrogate> {
    match fit_design(design, values, indices, nodes, ridge) {
        Err(Error::RankDeficient) if ridge < FALLBACK_RIDGE => {
            fit_design(design, values, indices, nodes, FALLBACK_RIDGE)
        }
        other => other,
    }
}

fn sample_points(samples: &SampleSet) -> Vec<Vec<f64>> {
    samples.points().map(<[f64]>::to_vec).collect()
}

/// Least-squares fit `argmin ‖D c - f‖² + ridge ‖c‖²`.
///
/// With `ridge == 0` a rank-deficient system is reported as
/// [`Error::RankDeficient`]; see [`fit_with_fallback`].
pub fn fit(
    samples: &SampleSet,
    indices: &MultiIndexSet,
    nodes: &GeneratingNodes,
    ridge: f64,
) -> Result<PolynomialSurrogate> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let design = design_matrix(&sample_points(samples), indices, nodes)?;
    fit_design(&design, &samples.values(), indices, nodes, ridge)
}

/// [`fit`], retrying with [`FALLBACK_RIDGE`] when the system is rank deficient.
pub fn fit_with_fallback(
    samples: &SampleSet,
    indices: &MultiIndexSet,
    nodes: &GeneratingNodes,
    ridge: f64,
) -> Result<PolynomialSurrogate> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let design = design_matrix(&sample_points(samples), indices, nodes)?;
    fit_design_with_fallback(&design, &samples.values(), indices, nodes, ridge)
}

/// Surrogates refitted on bootstrap resamples of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    indices: MultiIndexSet,
    nodes: GeneratingNodes,
    basis: Basis,
    members: Vec<Vec<f64>>,
}

impl BootstrapEnsemble {
    pub fn from_members(members: Vec<PolynomialSurrogate>) -> Result<Self> {
        let first = members
            .first()
            .ok_or(Error::Config("empty ensemble".into()))?;
        if members
            .iter()
            .any(|q| q.indices != first.indices || q.nodes != first.nodes)
        {
            return Err(Error::Config(
                "ensemble members must share indices and nodes".into(),
            ));
        }
        Ok(Self {
            indices: first.indices.clone(),
            nodes: first.nodes.clone(),
            basis: first.basis.clone(),
            members: members.into_iter().map(|q| q.coeffs).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, b: usize) -> PolynomialSurrogate {
        PolynomialSurrogate {
            indices: self.indices.clone(),
            nodes: self.nodes.clone(),
            coeffs: self.members[b].clone(),
            basis: self.basis.clone(),
        }
    }

    /// Member predictions at `x`.
    pub fn predictions(&self, x: &[f64]) -> Vec<f64> {
        let row = self.basis.values(x, self.nodes.nodes());
        self.members
            .iter()
            .map(|c| row.iter().zip(c).map(|(b, c)| b * c).sum())
            .collect()
    }

    /// Mean and population variance `(1/B) Σ (Q_b(x) - mean)²`.
    pub fn mean_var(&self, x: &[f64]) -> (f64, f64) {
        let preds = self.predictions(x);
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let var = preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
        (mean, var.max(0.0))
    }
}

/// Fits `b_count` surrogates, each on `|samples|` pairs drawn with
/// replacement. All resamples are drawn before any fitting happens.
pub fn bootstrap_fit(
    samples: &SampleSet,
    indices: &MultiIndexSet,
    nodes: &GeneratingNodes,
    b_count: usize,
    rng_seed: u64,
    ridge: f64,
) -> Result<BootstrapEnsemble> {
    if b_count == 0 {
        return Err(Error::Config(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let draws: Vec<Vec<usize>> = (0..b_count)
        .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
        .collect();

    let design = design_matrix(&sample_points(samples), indices, nodes)?;
    let values = samples.values();
    // A resample with repeated rows has the same least-squares minimiser as
    // its distinct rows weighted by sqrt(multiplicity).
    let members = draws
        .iter()
        .map(|rows| {
            let mut counts = vec![0u32; n];
            for &r in rows {
                counts[r] += 1;
            }
            let kept: Vec<usize> = (0..n).filter(|&r| counts[r] > 0).collect();
            let mut d = design.select_rows(&kept);
            let mut y = values.select_rows(&kept);
            for (i, &r) in kept.iter().enumerate() {
                let w = f64::from(counts[r]).sqrt();
                d.row_mut(i).scale_mut(w);
                y[i] *= w;
            }
            fit_design_with_fallback(&d, &y, indices, nodes, ridge)
        })
        .collect::<Result<Vec<_>>>()?;
    BootstrapEnsemble::from_members(members)
}

/// Pointwise ensemble mean and population variance.
pub fn ensemble_mean_var(ensemble: &BootstrapEnsemble, x: &[f64]) -> (f64, f64) {
    ensemble.mean_var(x)
}
