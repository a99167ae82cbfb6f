//! Downward-closed multi-index sets.
//!
//! A multi-index set `A ⊂ ℕ^m` selects the monomials (equivalently the Newton
//! basis functions) spanned by a polynomial surrogate. Every set handled here
//! is downward-closed: if `α ∈ A` and `α_i > 0` then `α - e_i ∈ A`. Sets only
//! ever grow, one frontier element at a time.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Largest exponent admitted in any coordinate unless configured otherwise.
/// Matches the default length of the generating-node sequence.
pub const DEFAULT_MAX_EXPONENT: u32 = 127;

/// An exponent vector `(α_1, …, α_m)`.
///
/// Ordering is graded lexicographic: total degree first, then plain
/// lexicographic comparison of the exponents.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(Self(exponents))
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    pub fn max_exponent(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `α + e_i`.
    pub fn successor(&self, i: usize) -> Self {
        let mut e = self.0.clone();
        e[i] += 1;
        Self(e)
    }

    /// `α - e_i`, or `None` when `α_i = 0`.
    pub fn predecessor(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[i] -= 1;
        Some(Self(e))
    }

    /// Iterator over all backward neighbours `α - e_i` with `α_i > 0`.
    pub fn predecessors(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.dimension()).filter_map(move |i| self.predecessor(i))
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(value: MultiIndex) -> Self {
        value.0
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        if self.0.len() == 1 {
            write!(f, ",")?;
        }
        write!(f, ")")
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Norm used to bound the "degree" of a multi-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeNorm {
    /// Total degree, `Σ α_i ≤ n`.
    #[default]
    L1,
    /// Euclidean degree, `Σ α_i² ≤ n²`.
    L2,
    /// Maximum degree, `max α_i ≤ n` (tensor-product space).
    LInf,
}

impl DegreeNorm {
    fn admits(self, exponents: &[u32], n: u32) -> bool {
        let n = u64::from(n);
        match self {
            DegreeNorm::L1 => exponents.iter().map(|&e| u64::from(e)).sum::<u64>() <= n,
            DegreeNorm::L2 => exponents.iter().map(|&e| u64::from(e).pow(2)).sum::<u64>() <= n * n,
            DegreeNorm::LInf => exponents.iter().all(|&e| u64::from(e) <= n),
        }
    }
}

/// True iff every backward neighbour of every member is also a member.
pub fn is_downward_closed(indices: &[MultiIndex]) -> bool {
    let mut sorted: Vec<&MultiIndex> = indices.iter().collect();
    sorted.sort();
    indices.iter().all(|alpha| {
        alpha
            .predecessors()
            .all(|beta| sorted.binary_search(&&beta).is_ok())
    })
}

/// A finite, non-empty, downward-closed multi-index set in canonical order.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    indices: Vec<MultiIndex>,
}

impl fmt::Debug for MultiIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices.iter()).finish()
    }
}

impl MultiIndexSet {
    /// Builds a set from members in any order. Duplicates are dropped; mixed
    /// dimensions and sets that are not downward-closed are rejected.
    pub fn from_indices(indices: Vec<MultiIndex>) -> Result<Self> {
        let dim = indices.first().ok_or(Error::EmptyIndexSet)?.dimension();
        if let Some(bad) = indices.iter().find(|a| a.dimension() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dimension(),
            });
        }
        let mut indices = indices;
        indices.sort();
        indices.dedup();
        if !is_downward_closed(&indices) {
            return Err(Error::NotDownwardClosed);
        }
        Ok(Self { dim, indices })
    }

    /// `{ α ∈ ℕ^m : ‖α‖_p ≤ n }` in canonical order.
    pub fn total_degree(dim: usize, n: u32, norm: DegreeNorm) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut indices = Vec::new();
        let mut current = vec![0u32; dim];
        enumerate_bounded(&mut current, 0, n, norm, &mut indices);
        indices.sort();
        Ok(Self { dim, indices })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.position(alpha).is_some()
    }

    /// Position of `alpha` in canonical order.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.indices.binary_search(alpha).ok()
    }

    /// Largest exponent used in each coordinate.
    pub fn max_exponents(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.dim];
        for alpha in &self.indices {
            for (o, &e) in out.iter_mut().zip(alpha.exponents()) {
                *o = (*o).max(e);
            }
        }
        out
    }

    fn admissible(&self, beta: &MultiIndex) -> bool {
        beta.dimension() == self.dim
            && !self.contains(beta)
            && beta.predecessors().all(|p| self.contains(&p))
    }

    /// Every `β ∉ A` whose addition keeps the set downward-closed, with all
    /// exponents at most [`DEFAULT_MAX_EXPONENT`].
    pub fn frontier(&self) -> Vec<MultiIndex> {
        self.frontier_bounded(DEFAULT_MAX_EXPONENT)
    }

    /// Frontier truncated to candidates whose exponents are all `≤ max_exponent`.
    pub fn frontier_bounded(&self, max_exponent: u32) -> Vec<MultiIndex> {
        let mut out: Vec<MultiIndex> = self
            .indices
            .iter()
            .flat_map(|alpha| (0..self.dim).map(move |i| alpha.successor(i)))
            .filter(|beta| beta.max_exponent() <= max_exponent)
            .filter(|beta| self.admissible(beta))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// `A ∪ {α}` for a frontier element `α`.
    pub fn add_index(&self, alpha: MultiIndex) -> Result<Self> {
        if !self.admissible(&alpha) {
            return Err(Error::NotInFrontier(alpha.into()));
        }
        let mut next = self.clone();
        next.insert_admissible(alpha);
        Ok(next)
    }

    /// In-place variant of [`MultiIndexSet::add_index`].
    pub fn insert(&mut self, alpha: MultiIndex) -> Result<()> {
        if !self.admissible(&alpha) {
            return Err(Error::NotInFrontier(alpha.into()));
        }
        self.insert_admissible(alpha);
        Ok(())
    }

    fn insert_admissible(&mut self, alpha: MultiIndex) {
        let at = self.indices.binary_search(&alpha).unwrap_err();
        self.indices.insert(at, alpha);
    }
}

fn enumerate_bounded(
    current: &mut Vec<u32>,
    pos: usize,
    n: u32,
    norm: DegreeNorm,
    out: &mut Vec<MultiIndex>,
) {
    if pos == current.len() {
        out.push(MultiIndex(current.clone()));
        return;
    }
    for e in 0..=n {
        current[pos] = e;
        // Later coordinates are still zero, so this prunes exactly.
        if !norm.admits(current, n) {
            break;
        }
        enumerate_bounded(current, pos + 1, n, norm, out);
    }
    current[pos] = 0;
}

/// The first `count` multi-indices of `ℕ^m` in graded-lexicographic order.
pub fn first_indices(dim: usize, count: usize) -> Result<Vec<MultiIndex>> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut out = Vec::with_capacity(count);
    let mut degree = 0u32;
    while out.len() < count {
        let mut current = vec![0u32; dim];
        compositions(&mut current, 0, degree, &mut out, count);
        degree += 1;
    }
    Ok(out)
}

// All exponent vectors with total `remaining` over positions pos.., in
// ascending lexicographic order.
fn compositions(
    current: &mut Vec<u32>,
    pos: usize,
    remaining: u32,
    out: &mut Vec<MultiIndex>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for e in 0..=remaining {
        current[pos] = e;
        compositions(current, pos + 1, remaining - e, out, limit);
    }
    current[pos] = 0;
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(deserializer)?;
        MultiIndex::new(v).map_err(D::Error::custom)
    }
}

impl Serialize for MultiIndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultiIndexSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<MultiIndex>::deserialize(deserializer)?;
        MultiIndexSet::from_indices(v).map_err(D::Error::custom)
    }
}
