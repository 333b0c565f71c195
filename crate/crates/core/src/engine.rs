//! The SGB-All operator.
//!
//! Tuples are consumed one at a time. For each tuple the engine asks two
//! questions of the groups built so far:
//!
//! * **group query**: which groups can the tuple join outright, i.e. is it
//!   within ε of every member?
//! * **overlap query**: for every other group, which members are within ε?
//!
//! The tuple joins every group from the first answer. After each step the
//! live groups are exactly the maximal cliques of the ε-similarity graph over
//! the tuples seen so far, which is what makes the result independent of the
//! input order.
//!
//! That invariant also bounds the new cliques. Any clique of earlier tuples
//! sits inside some live group, so if `K ∪ {t}` is a new maximal clique then
//! `K` is exactly the overlap-query answer for one non-joined group. The
//! candidates are therefore those answers, minus any contained in a joined
//! group or in a larger answer.
//!
//! Eliminate and new-group are post-passes over the duplicate result.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::{group_admits_l2, rect_bound, EpsHull, EpsRectangle};
use crate::error::{check_dim, Error, Result};
use crate::index::{GroupId, GroupIndex, PointIndex};
use crate::types::{canonicalize, GroupSet, Metric, Policy, SimilaritySpec, Tuple, TupleId};

/// Switches for the acceleration structures. Output never depends on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Use the R-tree over group rectangles and the per-group point indexes.
    pub use_index: bool,
    /// Use ε-rectangle and ε-hull bounds. When off, every decision is an
    /// all-pairs distance scan.
    pub use_bounds: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { use_index: true, use_bounds: true }
    }
}

impl EngineConfig {
    pub const ALL_PAIRS: EngineConfig = EngineConfig { use_index: false, use_bounds: false };

    /// Indexed, bounds without index, and all-pairs. An index without
    /// bounds has nothing to index, so that combination is left out.
    pub const VARIANTS: [EngineConfig; 3] = [
        EngineConfig { use_index: true, use_bounds: true },
        EngineConfig { use_index: false, use_bounds: true },
        EngineConfig::ALL_PAIRS,
    ];
}

/// A live All-ε-connected group with its bounds.
#[derive(Debug, Clone)]
pub struct Group {
    gid: GroupId,
    /// Sorted.
    members: Vec<TupleId>,
    rect: EpsRectangle,
    hull: Option<EpsHull>,
    points: PointIndex,
}

impl Group {
    pub fn gid(&self) -> GroupId {
        self.gid
    }

    /// Member ids, ascending.
    pub fn members(&self) -> &[TupleId] {
        &self.members
    }

    pub fn rect_bound(&self) -> &EpsRectangle {
        &self.rect
    }

    /// Present for L2 groups in two dimensions.
    pub fn hull_bound(&self) -> Option<&EpsHull> {
        self.hull.as_ref()
    }

    pub fn point_index(&self) -> &PointIndex {
        &self.points
    }

    fn member_points(&self) -> impl Iterator<Item = (TupleId, &[f64])> + '_ {
        self.points.iter()
    }
}

/// Per-query engine state: the live groups and their index.
#[derive(Debug, Clone)]
pub struct Engine {
    spec: SimilaritySpec,
    dim: usize,
    config: EngineConfig,
    groups: Vec<Group>,
    index: GroupIndex,
    /// Processed tuples in arrival order: ids, flattened coordinates and
    /// the groups each belongs to.
    ids: Vec<TupleId>,
    coords: Vec<f64>,
    groups_of: Vec<Vec<GroupId>>,
    slot_of: BTreeMap<TupleId, usize>,
}

impl Engine {
    pub fn new(spec: SimilaritySpec, dim: usize, config: EngineConfig) -> Self {
        Self {
            spec,
            dim,
            config,
            groups: Vec::new(),
            index: GroupIndex::new(),
            ids: Vec::new(),
            coords: Vec::new(),
            groups_of: Vec::new(),
            slot_of: BTreeMap::new(),
        }
    }

    pub fn spec(&self) -> &SimilaritySpec {
        &self.spec
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_index(&self) -> &GroupIndex {
        &self.index
    }

    pub fn processed(&self) -> usize {
        self.ids.len()
    }

    fn coords_of(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    /// Both queries by brute force: every processed tuple within ε of `p`,
    /// tallied per group. A group is joinable when all its members are
    /// neighbours.
    fn scan_queries(&self, p: &[f64]) -> (Vec<GroupId>, Vec<(GroupId, Vec<TupleId>)>) {
        let mut near: BTreeMap<GroupId, Vec<TupleId>> = BTreeMap::new();
        for (slot, q) in self.coords.chunks_exact(self.dim).enumerate() {
            if self.spec.similar(p, q) {
                for gid in &self.groups_of[slot] {
                    near.entry(*gid).or_default().push(self.ids[slot]);
                }
            }
        }
        let mut joined = Vec::new();
        let mut overlaps = Vec::new();
        for (gid, mut ids) in near {
            if ids.len() == self.groups[gid].members.len() {
                joined.push(gid);
            } else {
                ids.sort_unstable();
                overlaps.push((gid, ids));
            }
        }
        (joined, overlaps)
    }

    fn indexed(&self) -> bool {
        self.config.use_index && self.config.use_bounds
    }

    fn hull_tracked(&self) -> bool {
        self.spec.metric() == Metric::L2 && self.dim == 2
    }

    fn all_similar(&self, g: &Group, p: &[f64]) -> bool {
        g.member_points().all(|(_, q)| self.spec.similar(p, q))
    }

    /// Live groups `p` can join: those whose every member is within ε.
    pub fn group_query(&self, p: &[f64]) -> Result<Vec<GroupId>> {
        check_dim(self.dim, p.len())?;
        if !self.config.use_bounds {
            return Ok(self.scan_queries(p).0);
        }
        let candidates: Vec<GroupId> = if self.indexed() {
            self.index.candidates_containing(p)
        } else {
            self.groups.iter().filter(|g| g.rect.contains_unchecked(p)).map(|g| g.gid).collect()
        };
        let eps = self.spec.eps();
        let mut out = Vec::with_capacity(candidates.len());
        for gid in candidates {
            let g = &self.groups[gid];
            let admit = match (self.spec.metric(), &g.hull) {
                // The rectangle is exact under L∞.
                (Metric::LInf, _) => true,
                (Metric::L2, Some(hull)) => group_admits_l2(&g.rect, hull, p, eps)?,
                (Metric::L2, None) => self.all_similar(g, p),
            };
            if admit {
                out.push(gid);
            }
        }
        Ok(out)
    }

    /// For every live group not in `joined`, the members within ε of `p`.
    /// Groups with no such member are omitted. `joined` must be sorted.
    pub fn overlap_query(&self, p: &[f64], joined: &[GroupId]) -> Result<Vec<(GroupId, Vec<TupleId>)>> {
        check_dim(self.dim, p.len())?;
        let skip = |gid: GroupId| joined.binary_search(&gid).is_ok();
        let near = |ids: &mut dyn Iterator<Item = (TupleId, &[f64])>| -> Vec<TupleId> {
            let mut v: Vec<TupleId> = ids.filter(|(_, q)| self.spec.similar(p, q)).map(|(id, _)| id).collect();
            v.sort_unstable();
            v
        };
        if !self.config.use_bounds {
            let mut out = self.scan_queries(p).1;
            out.retain(|(g, _)| !skip(*g));
            return Ok(out);
        }
        let mut out = Vec::new();
        let region = EpsRectangle::eps_region(p, self.spec.eps());
        let candidates: Vec<GroupId> = if self.indexed() {
            self.index.candidates_intersecting(&region)
        } else {
            self.groups.iter().filter(|g| g.rect.intersects_unchecked(&region)).map(|g| g.gid).collect()
        };
        for gid in candidates.into_iter().filter(|g| !skip(*g)) {
            let g = &self.groups[gid];
            let ids = if self.indexed() {
                let mut v = Vec::new();
                g.points.for_each_in_region(&region, |id, q| {
                    if self.spec.similar(p, q) {
                        v.push(id);
                    }
                });
                v.sort_unstable();
                v
            } else {
                near(&mut g.member_points().filter(|(_, q)| region.contains_unchecked(q)))
            };
            if !ids.is_empty() {
                out.push((gid, ids));
            }
        }
        Ok(out)
    }

    /// Processes one tuple under duplicate semantics, keeping the live groups
    /// equal to the maximal cliques over everything processed so far.
    pub fn process(&mut self, t: &Tuple) -> Result<()> {
        check_dim(self.dim, t.point.len())?;
        if t.point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("tuple {} has a non-finite coordinate", t.id)));
        }
        if self.slot_of.contains_key(&t.id) {
            return Err(Error::InvalidInput(format!("tuple {} processed twice", t.id)));
        }
        let p = t.point.as_slice();
        let (joined, overlaps) = if self.config.use_bounds {
            let joined = self.group_query(p)?;
            let overlaps = self.overlap_query(p, &joined)?;
            (joined, overlaps)
        } else {
            self.scan_queries(p)
        };
        let candidates = self.new_cliques(&joined, overlaps);

        self.slot_of.insert(t.id, self.ids.len());
        self.ids.push(t.id);
        self.coords.extend_from_slice(p);
        self.groups_of.push(Vec::new());

        for &gid in &joined {
            self.join(gid, t)?;
        }
        for clique in &candidates {
            self.create_group(clique, t)?;
        }
        if joined.is_empty() && candidates.is_empty() {
            self.create_group(&[], t)?;
        }
        Ok(())
    }

    /// Overlap answers that, together with the new tuple, form a maximal
    /// clique: not contained in a joined group or in another answer.
    fn new_cliques(&self, joined: &[GroupId], overlaps: Vec<(GroupId, Vec<TupleId>)>) -> Vec<Vec<TupleId>> {
        let mut hits: Vec<Vec<TupleId>> = overlaps.into_iter().map(|(_, ids)| ids).collect();
        hits.sort_unstable();
        hits.dedup();
        let subsumed = |c: &Vec<TupleId>| {
            joined.iter().any(|g| is_subset(c, &self.groups[*g].members))
                || hits.iter().any(|o| o.len() > c.len() && is_subset(c, o))
        };
        hits.iter().filter(|c| !subsumed(c)).cloned().collect()
    }

    fn join(&mut self, gid: GroupId, t: &Tuple) -> Result<()> {
        let region = EpsRectangle::eps_region(&t.point, self.spec.eps());
        let indexed = self.indexed();
        let g = &mut self.groups[gid];
        g.rect = g.rect.intersect_unchecked(&region).ok_or_else(|| {
            Error::Internal(format!("tuple {} joined group {gid} but lies outside its ε-rectangle", t.id))
        })?;
        if let Some(h) = &mut g.hull {
            h.insert_in_place([t.point[0], t.point[1]]);
        }
        g.points.insert(t.id, &t.point);
        let at = g.members.partition_point(|m| *m < t.id);
        g.members.insert(at, t.id);
        if indexed {
            self.index.upsert(gid, g.rect.clone());
        }
        self.groups_of[self.slot_of[&t.id]].push(gid);
        Ok(())
    }

    /// New group from earlier tuples `ids` plus `t`, which must already
    /// have a slot.
    fn create_group(&mut self, ids: &[TupleId], t: &Tuple) -> Result<()> {
        let mut slots: Vec<usize> = Vec::with_capacity(ids.len() + 1);
        for id in ids.iter().chain([&t.id]) {
            let slot = *self
                .slot_of
                .get(id)
                .ok_or_else(|| Error::Internal(format!("tuple {id} was never processed")))?;
            slots.push(slot);
        }
        let eps = self.spec.eps();
        let rect = rect_bound(slots.iter().map(|s| self.coords_of(*s)), eps)
            .ok_or_else(|| Error::Internal("new group is not within ε under L∞".into()))?;
        let hull = self.hull_tracked().then(|| {
            let pts: Vec<[f64; 2]> = slots.iter().map(|s| self.coords_of(*s)).map(|q| [q[0], q[1]]).collect();
            EpsHull::from_points(&pts)
        });
        // All members lie in any one member's ε-region.
        let mut points = PointIndex::new(&EpsRectangle::eps_region(&t.point, eps));
        for s in &slots {
            points.insert(self.ids[*s], self.coords_of(*s));
        }
        let gid = self.groups.len();
        for s in &slots {
            self.groups_of[*s].push(gid);
        }
        let members: Vec<TupleId> = slots.iter().map(|s| self.ids[*s]).collect();
        if self.indexed() {
            self.index.upsert(gid, rect.clone());
        }
        let mut members = members;
        members.sort_unstable();
        self.groups.push(Group { gid, members, rect, hull, points });
        Ok(())
    }

    /// Current groups as a canonical duplicate-policy [`GroupSet`].
    pub fn group_set(&self) -> GroupSet {
        let groups = self.groups.iter().map(|g| g.members.clone()).collect();
        let mut gs = canonicalize(GroupSet { groups, oset: Vec::new(), policy: Policy::Duplicate });
        gs.oset = overlap_report(&gs).oset;
        gs
    }

    /// Checks every structural invariant of the live state. Meant for tests.
    pub fn check_invariants(&self) -> Result<()> {
        let eps = self.spec.eps();
        for g in &self.groups {
            let pts: Vec<&[f64]> = g.member_points().map(|(_, q)| q).collect();
            if pts.is_empty() || pts.len() != g.members.len() {
                return Err(Error::Internal(format!("group {} point index out of sync", g.gid)));
            }
            if g.members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Internal(format!("group {} member list is not sorted", g.gid)));
            }
            for (i, a) in pts.iter().enumerate() {
                if pts[i + 1..].iter().any(|b| !self.spec.similar(a, b)) {
                    return Err(Error::Internal(format!("group {} is not All-ε-connected", g.gid)));
                }
            }
            if rect_bound(pts.iter().copied(), eps).as_ref() != Some(&g.rect) {
                return Err(Error::Internal(format!("group {} rectangle is stale", g.gid)));
            }
            if let Some(h) = &g.hull {
                let fresh = EpsHull::from_points(&pts.iter().map(|q| [q[0], q[1]]).collect::<Vec<_>>());
                if fresh.vertices().len() != h.vertices().len() || fresh.vertices().iter().any(|v| !h.contains(*v)) {
                    return Err(Error::Internal(format!("group {} hull is stale", g.gid)));
                }
            }
            if self.indexed() && self.index.get(g.gid) != Some(&g.rect) {
                return Err(Error::Internal(format!("group {} index entry is stale", g.gid)));
            }
        }
        let listed: usize = self.groups_of.iter().map(Vec::len).sum();
        let held: usize = self.groups.iter().map(|g| g.members.len()).sum();
        let consistent = self.groups.iter().all(|g| {
            g.members.iter().all(|id| self.slot_of.get(id).is_some_and(|s| self.groups_of[*s].contains(&g.gid)))
        });
        if listed != held || !consistent {
            return Err(Error::Internal("tuple-to-group membership out of sync".into()));
        }
        if self.indexed() && self.index.len() != self.groups.len() {
            return Err(Error::Internal("group index holds unknown groups".into()));
        }
        Ok(())
    }
}

/// Both sorted.
fn is_subset(small: &[TupleId], big: &[TupleId]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

/// Overlap membership of a group set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapReport {
    /// Tuples in two or more groups, ascending.
    pub oset: Vec<TupleId>,
    /// Tuple id to the indexes (into `GroupSet::groups`) of its groups.
    pub membership: BTreeMap<TupleId, Vec<GroupId>>,
}

pub fn overlap_report(gs: &GroupSet) -> OverlapReport {
    let mut membership: BTreeMap<TupleId, Vec<GroupId>> = BTreeMap::new();
    for (gid, g) in gs.groups.iter().enumerate() {
        for id in g {
            let slot = membership.entry(*id).or_default();
            if slot.last() != Some(&gid) {
                slot.push(gid);
            }
        }
    }
    let oset = membership.iter().filter(|(_, gs)| gs.len() >= 2).map(|(id, _)| *id).collect();
    OverlapReport { oset, membership }
}

/// Runs the operator over a dataset with the default configuration.
pub fn run(dataset: &crate::types::Dataset, spec: SimilaritySpec, policy: Policy) -> Result<GroupSet> {
    run_with_config(dataset.tuples(), spec, policy, EngineConfig::default())
}

/// Runs the operator over tuples in the given order. Tuple ids must be
/// distinct; dimensions must agree. The result is canonical.
pub fn run_with_config(tuples: &[Tuple], spec: SimilaritySpec, policy: Policy, config: EngineConfig) -> Result<GroupSet> {
    match policy {
        Policy::Duplicate => duplicate(tuples, spec, config),
        Policy::Eliminate => Ok(eliminate(&duplicate(tuples, spec, config)?)),
        Policy::NewGroup => new_group(tuples, spec, config),
    }
}

fn duplicate(tuples: &[Tuple], spec: SimilaritySpec, config: EngineConfig) -> Result<GroupSet> {
    let Some(first) = tuples.first() else {
        return Ok(GroupSet::empty(Policy::Duplicate));
    };
    let mut engine = Engine::new(spec, first.dim(), config);
    for t in tuples {
        engine.process(t)?;
    }
    Ok(engine.group_set())
}

/// Removes overlap-set tuples from every group and drops emptied groups.
fn eliminate(dup: &GroupSet) -> GroupSet {
    let oset = &dup.oset;
    let groups = dup
        .groups
        .iter()
        .map(|g| g.iter().copied().filter(|id| oset.binary_search(id).is_err()).collect::<Vec<_>>())
        .filter(|g| !g.is_empty())
        .collect();
    canonicalize(GroupSet { groups, oset: Vec::new(), policy: Policy::Eliminate })
}

/// Eliminate, then regroup the overlap set in further rounds until a round
/// has no overlap. A round whose overlap set is its whole input cannot make
/// progress (every tuple sits in two or more cliques, e.g. a 4-cycle); its
/// tuples are emitted as singletons.
fn new_group(tuples: &[Tuple], spec: SimilaritySpec, config: EngineConfig) -> Result<GroupSet> {
    let mut groups: Vec<Vec<TupleId>> = Vec::new();
    let mut current: Vec<Tuple> = tuples.to_vec();
    let cap = tuples.len() + 1;
    for _ in 0..cap {
        if current.is_empty() {
            return Ok(canonicalize(GroupSet { groups, oset: Vec::new(), policy: Policy::NewGroup }));
        }
        let dup = duplicate(&current, spec, config)?;
        if dup.oset.len() == current.len() {
            groups.extend(current.iter().map(|t| vec![t.id]));
            current.clear();
            continue;
        }
        groups.extend(eliminate(&dup).groups);
        current.retain(|t| dup.oset.binary_search(&t.id).is_ok());
    }
    Err(Error::Internal(format!("new-group did not converge within {cap} rounds")))
}
