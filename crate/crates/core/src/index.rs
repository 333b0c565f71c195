//! Spatial indexes used by the grouping engine.
//!
//! [`GroupIndex`] is an R-tree over group ε-rectangles. It answers "which
//! groups could a point join" (point containment) and "which groups could a
//! point overlap" (box intersection). [`PointIndex`] indexes the member points
//! of a single group for ε-region retrieval: a quadtree in two dimensions and
//! a uniform grid otherwise.
//!
//! Both are pure accelerations: every query returns exactly what a linear
//! scan over the same entries would.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::EpsRectangle;
use crate::types::TupleId;

pub type GroupId = usize;

const MAX_ENTRIES: usize = 16;

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf(Vec<(GroupId, EpsRectangle)>),
    Inner(Vec<usize>),
}

#[derive(Debug, Clone)]
struct Node {
    parent: Option<usize>,
    /// `None` while the subtree is empty.
    bbox: Option<EpsRectangle>,
    kind: NodeKind,
}

impl Node {
    fn leaf(parent: Option<usize>) -> Self {
        Self { parent, bbox: None, kind: NodeKind::Leaf(Vec::new()) }
    }

    fn len(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf(e) => e.len(),
            NodeKind::Inner(c) => c.len(),
        }
    }
}

/// Dynamic R-tree keyed by group id.
///
/// Splits sort entries along the axis with the widest spread of centers and
/// cut in half. Removal does not condense underfull nodes; bounding boxes are
/// tightened on the way up so queries stay exact.
#[derive(Debug, Clone)]
pub struct GroupIndex {
    nodes: Vec<Node>,
    root: usize,
    /// Leaf node holding each gid.
    location: BTreeMap<GroupId, usize>,
}

impl Default for GroupIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl GroupIndex {
    pub fn new() -> Self {
        Self { nodes: vec![Node::leaf(None)], root: 0, location: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.location.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location.is_empty()
    }

    pub fn get(&self, gid: GroupId) -> Option<&EpsRectangle> {
        let leaf = *self.location.get(&gid)?;
        match &self.nodes[leaf].kind {
            NodeKind::Leaf(entries) => entries.iter().find(|(g, _)| *g == gid).map(|(_, r)| r),
            NodeKind::Inner(_) => None,
        }
    }

    /// All `(gid, rect)` pairs in gid order.
    pub fn entries(&self) -> Vec<(GroupId, EpsRectangle)> {
        self.location.keys().filter_map(|g| self.get(*g).map(|r| (*g, r.clone()))).collect()
    }

    /// Inserts or replaces the rectangle stored for `gid`.
    pub fn upsert(&mut self, gid: GroupId, rect: EpsRectangle) {
        // A shrinking rectangle stays covered by every ancestor box, so it
        // can be replaced in place. Joins only ever shrink a group's bound.
        if let Some(&leaf) = self.location.get(&gid) {
            if let NodeKind::Leaf(entries) = &mut self.nodes[leaf].kind {
                if let Some(slot) = entries.iter_mut().find(|(g, _)| *g == gid) {
                    if slot.1.covers(&rect) {
                        slot.1 = rect;
                        return;
                    }
                }
            }
        }
        self.remove(gid);
        let leaf = self.choose_leaf(&rect);
        if let NodeKind::Leaf(entries) = &mut self.nodes[leaf].kind {
            entries.push((gid, rect));
        }
        self.location.insert(gid, leaf);
        self.refresh_upwards(leaf);
        if self.nodes[leaf].len() > MAX_ENTRIES {
            self.split(leaf);
        }
    }

    pub fn remove(&mut self, gid: GroupId) -> bool {
        let Some(leaf) = self.location.remove(&gid) else {
            return false;
        };
        if let NodeKind::Leaf(entries) = &mut self.nodes[leaf].kind {
            entries.retain(|(g, _)| *g != gid);
        }
        self.refresh_upwards(leaf);
        true
    }

    /// Groups whose rectangle contains `p`, boundary inclusive, in gid order.
    pub fn candidates_containing(&self, p: &[f64]) -> Vec<GroupId> {
        let mut out = Vec::new();
        self.search(|r| r.contains_unchecked(p), &mut out);
        out.sort_unstable();
        out
    }

    /// Groups whose rectangle intersects `region` (closed), in gid order.
    pub fn candidates_intersecting(&self, region: &EpsRectangle) -> Vec<GroupId> {
        let mut out = Vec::new();
        self.search(|r| r.intersects_unchecked(region), &mut out);
        out.sort_unstable();
        out
    }

    /// Visits subtrees whose box passes `pred`; `pred` must be monotone
    /// (true for a box whenever true for a sub-box).
    fn search(&self, pred: impl Fn(&EpsRectangle) -> bool, out: &mut Vec<GroupId>) {
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            match &node.bbox {
                Some(b) if pred(b) => {}
                _ => continue,
            }
            match &node.kind {
                NodeKind::Leaf(entries) => out.extend(entries.iter().filter(|(_, r)| pred(r)).map(|(g, _)| *g)),
                NodeKind::Inner(children) => stack.extend(children.iter().copied()),
            }
        }
    }

    fn choose_leaf(&self, rect: &EpsRectangle) -> usize {
        let mut n = self.root;
        while let NodeKind::Inner(children) = &self.nodes[n].kind {
            n = *children
                .iter()
                .min_by(|a, b| {
                    let ka = self.enlargement(**a, rect);
                    let kb = self.enlargement(**b, rect);
                    ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
                })
                .expect("inner nodes are never empty");
        }
        n
    }

    /// (volume growth, margin growth) of covering `rect` with node `n`.
    fn enlargement(&self, n: usize, rect: &EpsRectangle) -> (f64, f64) {
        match &self.nodes[n].bbox {
            Some(b) => {
                let u = b.union(rect);
                (u.volume() - b.volume(), u.margin() - b.margin())
            }
            None => (rect.volume(), rect.margin()),
        }
    }

    fn recompute_bbox(&mut self, n: usize) {
        let bbox = match &self.nodes[n].kind {
            NodeKind::Leaf(entries) => entries.iter().map(|(_, r)| r.clone()).reduce(|a, b| a.union(&b)),
            NodeKind::Inner(children) => children
                .iter()
                .filter_map(|c| self.nodes[*c].bbox.clone())
                .reduce(|a, b| a.union(&b)),
        };
        self.nodes[n].bbox = bbox;
    }

    fn refresh_upwards(&mut self, mut n: usize) {
        loop {
            self.recompute_bbox(n);
            match self.nodes[n].parent {
                Some(p) => n = p,
                None => break,
            }
        }
    }

    fn split(&mut self, n: usize) {
        let sibling = self.nodes.len();
        let parent = self.nodes[n].parent;
        let kind = core::mem::replace(&mut self.nodes[n].kind, NodeKind::Leaf(Vec::new()));
        let (keep, moved) = match kind {
            NodeKind::Leaf(mut entries) => {
                let axis = widest_axis(entries.iter().map(|(_, r)| r));
                entries.sort_by(|a, b| a.1.center(axis).total_cmp(&b.1.center(axis)));
                let tail = entries.split_off(entries.len() / 2);
                for (g, _) in &tail {
                    self.location.insert(*g, sibling);
                }
                (NodeKind::Leaf(entries), NodeKind::Leaf(tail))
            }
            NodeKind::Inner(mut children) => {
                let boxes: Vec<EpsRectangle> =
                    children.iter().filter_map(|c| self.nodes[*c].bbox.clone()).collect();
                let axis = widest_axis(boxes.iter());
                let key = |c: &usize| self.nodes[*c].bbox.as_ref().map_or(f64::NEG_INFINITY, |b| b.center(axis));
                children.sort_by(|a, b| key(a).total_cmp(&key(b)));
                let tail = children.split_off(children.len() / 2);
                for c in &tail {
                    self.nodes[*c].parent = Some(sibling);
                }
                (NodeKind::Inner(children), NodeKind::Inner(tail))
            }
        };
        self.nodes[n].kind = keep;
        self.nodes.push(Node { parent, bbox: None, kind: moved });
        self.recompute_bbox(n);
        self.recompute_bbox(sibling);

        match parent {
            None => {
                let root = self.nodes.len();
                self.nodes.push(Node { parent: None, bbox: None, kind: NodeKind::Inner(vec![n, sibling]) });
                self.nodes[n].parent = Some(root);
                self.nodes[sibling].parent = Some(root);
                self.root = root;
                self.recompute_bbox(root);
            }
            Some(p) => {
                if let NodeKind::Inner(children) = &mut self.nodes[p].kind {
                    children.push(sibling);
                }
                self.refresh_upwards(p);
                if self.nodes[p].len() > MAX_ENTRIES {
                    self.split(p);
                }
            }
        }
    }
}

fn widest_axis<'a>(rects: impl Iterator<Item = &'a EpsRectangle>) -> usize {
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for r in rects {
        if lo.is_empty() {
            lo = vec![f64::INFINITY; r.dim()];
            hi = vec![f64::NEG_INFINITY; r.dim()];
        }
        for a in 0..r.dim() {
            let c = r.center(a);
            lo[a] = lo[a].min(c);
            hi[a] = hi[a].max(c);
        }
    }
    (0..lo.len())
        .max_by(|a, b| (hi[*a] - lo[*a]).total_cmp(&(hi[*b] - lo[*b])))
        .unwrap_or(0)
}

const QUAD_CAPACITY: usize = 8;
const QUAD_MAX_DEPTH: u32 = 24;

#[derive(Debug, Clone)]
struct QuadNode {
    min: [f64; 2],
    max: [f64; 2],
    depth: u32,
    slots: Vec<usize>,
    children: Option<[usize; 4]>,
}

impl QuadNode {
    fn new(min: [f64; 2], max: [f64; 2], depth: u32) -> Self {
        Self { min, max, depth, slots: Vec::new(), children: None }
    }

    fn covers(&self, p: &[f64]) -> bool {
        self.min[0] <= p[0] && p[0] <= self.max[0] && self.min[1] <= p[1] && p[1] <= self.max[1]
    }

    fn meets(&self, r: &EpsRectangle) -> bool {
        let (lo, hi) = (r.lo(), r.hi());
        self.min[0] <= hi[0] && lo[0] <= self.max[0] && self.min[1] <= hi[1] && lo[1] <= self.max[1]
    }
}

#[derive(Debug, Clone)]
struct QuadTree {
    nodes: Vec<QuadNode>,
    /// Points outside the root extent.
    outside: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Grid {
    origin: Vec<f64>,
    cell: Vec<f64>,
    cells: BTreeMap<Vec<i64>, Vec<usize>>,
}

impl Grid {
    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .zip(&self.origin)
            .zip(&self.cell)
            .map(|((v, o), c)| libm::floor((v - o) / c) as i64)
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Partition {
    Quad(QuadTree),
    Grid(Grid),
}

/// Member points of one group.
#[derive(Debug, Clone)]
pub struct PointIndex {
    dim: usize,
    ids: Vec<TupleId>,
    coords: Vec<f64>,
    partition: Partition,
}

impl PointIndex {
    /// `extent` is where points are expected to fall; points outside it are
    /// still accepted. Two-dimensional extents get a quadtree, every other
    /// dimension a grid with cells half the extent's width.
    pub fn new(extent: &EpsRectangle) -> Self {
        let dim = extent.dim();
        let partition = if dim == 2 {
            let (lo, hi) = (extent.lo(), extent.hi());
            Partition::Quad(QuadTree {
                nodes: vec![QuadNode::new([lo[0], lo[1]], [hi[0], hi[1]], 0)],
                outside: Vec::new(),
            })
        } else {
            let cell = extent
                .lo()
                .iter()
                .zip(extent.hi())
                .map(|(l, h)| {
                    let w = 0.5 * (h - l);
                    if w > 0.0 && w.is_finite() { w } else { 1.0 }
                })
                .collect();
            Partition::Grid(Grid { origin: extent.lo().to_vec(), cell, cells: BTreeMap::new() })
        };
        Self { dim, ids: Vec::new(), coords: Vec::new(), partition }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    /// `(id, point)` for every stored member, in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (TupleId, &[f64])> + '_ {
        self.ids.iter().enumerate().map(|(s, id)| (*id, self.point(s)))
    }

    pub fn insert(&mut self, id: TupleId, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        let slot = self.ids.len();
        self.ids.push(id);
        self.coords.extend_from_slice(p);
        match &mut self.partition {
            Partition::Quad(tree) => {
                if !tree.nodes[0].covers(p) {
                    tree.outside.push(slot);
                    return;
                }
                let mut n = 0;
                while let Some(ch) = tree.nodes[n].children {
                    n = ch[quadrant(&tree.nodes[n], p)];
                }
                tree.nodes[n].slots.push(slot);
                if tree.nodes[n].slots.len() > QUAD_CAPACITY && tree.nodes[n].depth < QUAD_MAX_DEPTH {
                    subdivide(tree, n, &self.coords);
                }
            }
            Partition::Grid(grid) => {
                let key = grid.key(p);
                grid.cells.entry(key).or_default().push(slot);
            }
        }
    }

    /// Ids of members inside `region` (closed), in insertion order.
    pub fn points_in_region(&self, region: &EpsRectangle) -> Vec<TupleId> {
        self.entries_in_region(region).into_iter().map(|(id, _)| id).collect()
    }

    /// Like [`points_in_region`](Self::points_in_region), with coordinates.
    pub fn entries_in_region(&self, region: &EpsRectangle) -> Vec<(TupleId, &[f64])> {
        let mut slots = Vec::new();
        self.visit_slots(region, |s| slots.push(s));
        slots.sort_unstable();
        slots.into_iter().map(|s| (self.ids[s], self.point(s))).collect()
    }

    /// Calls `f` for every member inside `region` (closed), in no
    /// particular order.
    pub fn for_each_in_region(&self, region: &EpsRectangle, mut f: impl FnMut(TupleId, &[f64])) {
        self.visit_slots(region, |s| f(self.ids[s], self.point(s)));
    }

    fn visit_slots(&self, region: &EpsRectangle, mut f: impl FnMut(usize)) {
        let mut hit = |s: usize| {
            if region.contains_unchecked(self.point(s)) {
                f(s);
            }
        };
        match &self.partition {
            Partition::Quad(tree) => {
                tree.outside.iter().for_each(|s| hit(*s));
                let mut stack = Vec::with_capacity(4 * QUAD_MAX_DEPTH as usize);
                stack.push(0usize);
                while let Some(n) = stack.pop() {
                    let node = &tree.nodes[n];
                    if !node.meets(region) {
                        continue;
                    }
                    node.slots.iter().for_each(|s| hit(*s));
                    if let Some(ch) = node.children {
                        stack.extend(ch);
                    }
                }
            }
            Partition::Grid(grid) => {
                let lo = grid.key(region.lo());
                let hi = grid.key(region.hi());
                let span: u128 = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, h)| (h.saturating_sub(*l)).max(0) as u128 + 1)
                    .fold(1u128, |a, b| a.saturating_mul(b));
                if span <= grid.cells.len() as u128 {
                    let mut key = lo.clone();
                    loop {
                        if let Some(s) = grid.cells.get(&key) {
                            s.iter().for_each(|s| hit(*s));
                        }
                        // odometer increment over the cell range
                        let mut axis = 0;
                        while axis < key.len() {
                            if key[axis] < hi[axis] {
                                key[axis] += 1;
                                break;
                            }
                            key[axis] = lo[axis];
                            axis += 1;
                        }
                        if axis == key.len() {
                            break;
                        }
                    }
                } else {
                    for (key, s) in &grid.cells {
                        if key.iter().zip(lo.iter().zip(&hi)).all(|(k, (l, h))| l <= k && k <= h) {
                            s.iter().for_each(|s| hit(*s));
                        }
                    }
                }
            }
        }
    }
}

fn quadrant(node: &QuadNode, p: &[f64]) -> usize {
    let mx = 0.5 * (node.min[0] + node.max[0]);
    let my = 0.5 * (node.min[1] + node.max[1]);
    usize::from(p[0] > mx) | (usize::from(p[1] > my) << 1)
}

fn subdivide(tree: &mut QuadTree, n: usize, coords: &[f64]) {
    let QuadNode { min, max, depth, .. } = tree.nodes[n];
    let mid = [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])];
    let base = tree.nodes.len();
    for q in 0..4 {
        let (x0, x1) = if q & 1 == 0 { (min[0], mid[0]) } else { (mid[0], max[0]) };
        let (y0, y1) = if q & 2 == 0 { (min[1], mid[1]) } else { (mid[1], max[1]) };
        tree.nodes.push(QuadNode::new([x0, y0], [x1, y1], depth + 1));
    }
    let children = [base, base + 1, base + 2, base + 3];
    tree.nodes[n].children = Some(children);
    let slots = core::mem::take(&mut tree.nodes[n].slots);
    for s in slots {
        let p = &coords[s * 2..s * 2 + 2];
        let c = children[quadrant(&tree.nodes[n], p)];
        tree.nodes[c].slots.push(s);
    }
}
