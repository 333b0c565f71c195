//! Domain types, the distance functions and the similarity predicate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Error, Result};

/// Stable tuple identifier: the row index at ingestion.
pub type TupleId = usize;

/// One input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuple {
    pub id: TupleId,
    /// The grouping vector.
    pub point: Vec<f64>,
    /// Non-grouping attributes, positionally aligned with [`Dataset::schema`].
    pub attrs: Vec<f64>,
}

impl Tuple {
    pub fn new(id: TupleId, point: Vec<f64>) -> Self {
        Self { id, point, attrs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }
}

/// An ordered relation of tuples sharing one grouping dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<String>,
    dimension: usize,
    tuples: Vec<Tuple>,
}

impl Dataset {
    /// Validates that every tuple has `dimension` finite coordinates, that
    /// attribute vectors match the schema, and that ids run `0..n` in order.
    pub fn new(schema: Vec<String>, dimension: usize, tuples: Vec<Tuple>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        for (pos, t) in tuples.iter().enumerate() {
            if t.id != pos {
                return Err(Error::InvalidInput(format!(
                    "tuple at position {pos} has id {}; ids must be 0..n in order",
                    t.id
                )));
            }
            check_dim(dimension, t.point.len())?;
            if t.point.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("tuple {} has a non-finite coordinate", t.id)));
            }
            if t.attrs.len() != schema.len() {
                return Err(Error::InvalidInput(format!(
                    "tuple {} has {} attributes, schema has {}",
                    t.id,
                    t.attrs.len(),
                    schema.len()
                )));
            }
        }
        Ok(Self { schema, dimension, tuples })
    }

    /// Builds an attribute-less dataset, numbering points in order.
    pub fn from_points<P: Into<Vec<f64>>>(dimension: usize, points: impl IntoIterator<Item = P>) -> Result<Self> {
        let tuples = points
            .into_iter()
            .enumerate()
            .map(|(id, p)| Tuple::new(id, p.into()))
            .collect();
        Self::new(Vec::new(), dimension, tuples)
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple(&self, id: TupleId) -> Option<&Tuple> {
        self.tuples.get(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Euclidean distance.
    L2,
    /// Maximum coordinate difference.
    LInf,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L2 => "L2",
            Metric::LInf => "LINF",
        })
    }
}

/// A distance metric paired with the similarity threshold ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilaritySpec {
    metric: Metric,
    eps: f64,
}

impl SimilaritySpec {
    pub fn new(metric: Metric, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be finite and > 0, got {eps}")));
        }
        Ok(Self { metric, eps })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Distance without the dimension check. Callers guarantee equal lengths.
    #[inline]
    pub(crate) fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.metric {
            Metric::L2 => libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()),
            Metric::LInf => a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, libm::fabs(x - y))),
        }
    }

    #[inline]
    pub(crate) fn similar(&self, a: &[f64], b: &[f64]) -> bool {
        self.dist(a, b) <= self.eps
    }
}

pub fn distance(spec: &SimilaritySpec, a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(spec.dist(a, b))
}

/// The similarity predicate: `distance(a, b) <= eps`, inclusive.
pub fn is_similar(spec: &SimilaritySpec, a: &[f64], b: &[f64]) -> Result<bool> {
    Ok(distance(spec, a, b)? <= spec.eps)
}

fn check_group(tuples: &[Tuple]) -> Result<()> {
    let first = tuples
        .first()
        .ok_or_else(|| Error::InvalidInput("group must be nonempty".into()))?;
    tuples.iter().try_for_each(|t| check_dim(first.dim(), t.dim()))
}

/// True iff every unordered pair of `tuples` is similar.
pub fn is_all_eps_connected(tuples: &[Tuple], spec: &SimilaritySpec) -> Result<bool> {
    check_group(tuples)?;
    Ok(tuples
        .iter()
        .enumerate()
        .all(|(i, a)| tuples[i + 1..].iter().all(|b| spec.similar(&a.point, &b.point))))
}

/// Group compactness: the number of similar unordered pairs in the group.
pub fn gpact(tuples: &[Tuple], spec: &SimilaritySpec) -> Result<usize> {
    check_group(tuples)?;
    Ok(tuples
        .iter()
        .enumerate()
        .map(|(i, a)| tuples[i + 1..].iter().filter(|b| spec.similar(&a.point, &b.point)).count())
        .sum())
}

/// How tuples that belong to several groups are arbitrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Duplicate,
    Eliminate,
    NewGroup,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Duplicate, Policy::Eliminate, Policy::NewGroup];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Duplicate => "DUPLICATE",
            Policy::Eliminate => "ELIMINATE",
            Policy::NewGroup => "NEW-GROUP",
        }
    }
}

impl core::str::FromStr for Policy {
    type Err = Error;

    /// Accepts the display names, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown overlap policy '{s}'")))
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Operator output: groups of tuple ids plus the overlap set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupSet {
    pub groups: Vec<Vec<TupleId>>,
    /// Tuples belonging to two or more groups.
    pub oset: Vec<TupleId>,
    pub policy: Policy,
}

impl GroupSet {
    pub fn empty(policy: Policy) -> Self {
        Self { groups: Vec::new(), oset: Vec::new(), policy }
    }

    pub fn canonical(self) -> Self {
        canonicalize(self)
    }
}

/// Sorts members within groups, groups lexicographically and the overlap
/// set. Equal groups collapse into one. Idempotent.
pub fn canonicalize(mut gs: GroupSet) -> GroupSet {
    for g in &mut gs.groups {
        g.sort_unstable();
        g.dedup();
    }
    gs.groups.sort_unstable();
    gs.groups.dedup();
    gs.oset.sort_unstable();
    gs.oset.dedup();
    gs
}
