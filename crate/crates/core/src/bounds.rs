//! Group bounds that replace all-pairs distance checks.
//!
//! Every tuple owns an ε-region: the closed box of half-width ε around it. A
//! group's ε-rectangle is the intersection of its members' ε-regions, so a
//! point lies inside it exactly when it is within L∞ distance ε of every
//! member. Under L2 the rectangle is only a necessary condition; the 2D
//! ε-convex hull plus a farthest-vertex test makes the decision exact.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};

/// Closed axis-aligned box. Never inverted: an empty intersection is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRectangle {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl EpsRectangle {
    /// Returns `None` if the lengths differ or any axis is inverted.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Option<Self> {
        (lo.len() == hi.len() && lo.iter().zip(&hi).all(|(l, h)| l <= h)).then_some(Self { lo, hi })
    }

    /// `[p - eps, p + eps]` on every axis.
    pub fn eps_region(point: &[f64], eps: f64) -> Self {
        Self {
            lo: point.iter().map(|v| v - eps).collect(),
            hi: point.iter().map(|v| v + eps).collect(),
        }
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn intersect(&self, other: &Self) -> Result<Option<Self>> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.intersect_unchecked(other))
    }

    pub(crate) fn intersect_unchecked(&self, other: &Self) -> Option<Self> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        Self::new(lo, hi)
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        check_dim(self.dim(), p.len())?;
        Ok(self.contains_unchecked(p))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn intersects(&self, other: &Self) -> Result<bool> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.intersects_unchecked(other))
    }

    #[inline]
    pub(crate) fn intersects_unchecked(&self, other: &Self) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    /// Whether `other` lies inside `self`.
    pub(crate) fn covers(&self, other: &Self) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Smallest box covering both.
    pub(crate) fn union(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub(crate) fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub(crate) fn margin(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).sum()
    }

    pub(crate) fn center(&self, axis: usize) -> f64 {
        0.5 * (self.lo[axis] + self.hi[axis])
    }
}

/// Convenience alias for [`EpsRectangle::eps_region`].
pub fn eps_region(point: &[f64], eps: f64) -> EpsRectangle {
    EpsRectangle::eps_region(point, eps)
}

/// Folds member ε-regions into a group rectangle. `None` if the members are
/// not pairwise within L∞ distance ε (or there are none).
pub fn rect_bound<'a>(points: impl IntoIterator<Item = &'a [f64]>, eps: f64) -> Option<EpsRectangle> {
    let mut it = points.into_iter();
    let EpsRectangle { mut lo, mut hi } = EpsRectangle::eps_region(it.next()?, eps);
    for p in it {
        for (a, v) in p.iter().enumerate() {
            lo[a] = lo[a].max(v - eps);
            hi[a] = hi[a].min(v + eps);
        }
    }
    EpsRectangle::new(lo, hi)
}

pub type Point2 = [f64; 2];

#[inline]
fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
fn dist2d(a: Point2, b: Point2) -> f64 {
    // Same formula as the L2 metric so decisions agree bit for bit.
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    libm::sqrt(dx * dx + dy * dy)
}

/// Convex polygon in counter-clockwise order with collinear points elided.
///
/// Degenerate hulls are a single point or a segment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpsHull {
    vertices: Vec<Point2>,
}

impl EpsHull {
    pub fn new() -> Self {
        Self::default()
    }

    /// Andrew's monotone chain.
    pub fn from_points(points: &[Point2]) -> Self {
        let mut pts: Vec<Point2> = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() <= 2 {
            return Self { vertices: pts };
        }
        let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() + 1);
        for &p in &pts {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        let lower = hull.len() + 1;
        for &p in pts.iter().rev().skip(1) {
            while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        Self { vertices: hull }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Hull of the current vertices plus `p`.
    pub fn insert(&self, p: Point2) -> Self {
        let mut h = self.clone();
        h.insert_in_place(p);
        h
    }

    pub fn insert_in_place(&mut self, p: Point2) {
        if self.contains(p) {
            return;
        }
        self.vertices.push(p);
        self.vertices = Self::from_points(&self.vertices).vertices;
    }

    /// Inside or on the boundary.
    pub fn contains(&self, p: Point2) -> bool {
        match self.vertices.as_slice() {
            [] => false,
            [v] => *v == p,
            [a, b] => {
                cross(*a, *b, p) == 0.0
                    && a[0].min(b[0]) <= p[0]
                    && p[0] <= a[0].max(b[0])
                    && a[1].min(b[1]) <= p[1]
                    && p[1] <= a[1].max(b[1])
            }
            vs => (0..vs.len()).all(|i| cross(vs[i], vs[(i + 1) % vs.len()], p) >= 0.0),
        }
    }

    /// Largest Euclidean distance from `p` to a hull vertex. The farthest
    /// point of a convex polygon from any query point is one of its vertices.
    pub fn farthest_vertex_distance(&self, p: Point2) -> Result<f64> {
        if self.vertices.is_empty() {
            return Err(Error::InvalidInput("farthest vertex of an empty hull".into()));
        }
        Ok(self.vertices.iter().fold(0.0, |m, v| f64::max(m, dist2d(*v, p))))
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let vs = &self.vertices;
        (0..vs.len())
            .flat_map(|i| (i + 1..vs.len()).map(move |j| (i, j)))
            .fold(0.0, |m, (i, j)| f64::max(m, dist2d(vs[i], vs[j])))
    }
}

/// Decides whether `p` is within L2 distance `eps` of every point the bounds
/// were built from. The rectangle rejects first; inside the hull accepts;
/// otherwise the farthest hull vertex decides.
pub fn group_admits_l2(rect: &EpsRectangle, hull: &EpsHull, p: &[f64], eps: f64) -> Result<bool> {
    if p.len() != 2 || rect.dim() != 2 {
        return Err(Error::Unsupported("hull bounds are only maintained in two dimensions".into()));
    }
    let q = [p[0], p[1]];
    if !rect.contains_unchecked(p) {
        return Ok(false);
    }
    if hull.contains(q) {
        return Ok(true);
    }
    Ok(hull.farthest_vertex_distance(q)? <= eps)
}
