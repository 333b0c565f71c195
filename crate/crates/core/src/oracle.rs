//! Reference semantics by brute force.
//!
//! The oracle materializes the ε-similarity graph, enumerates its maximal
//! cliques and derives each overlap policy declaratively. It shares no code
//! with the engine's incremental path and only scales to desk-sized inputs.
//!
//! The permutation harness runs any grouping function over shuffled inputs
//! and reports a witness if two orders disagree. Shuffles use ChaCha8
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`) with `rand`'s
//! Fisher–Yates `shuffle`, one RNG stream per check.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{run_with_config, EngineConfig};
use crate::error::Result;
use crate::types::{canonicalize, GroupSet, Policy, SimilaritySpec, Tuple, TupleId};

/// Explicit ε-similarity graph. Vertex `i` is `ids[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityGraph {
    ids: Vec<TupleId>,
    adj: Vec<BTreeSet<usize>>,
}

impl SimilarityGraph {
    pub fn vertices(&self) -> &[TupleId] {
        &self.ids
    }

    pub fn neighbours(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    /// Edges as `(smaller id, larger id)`, sorted.
    pub fn edges(&self) -> Vec<(TupleId, TupleId)> {
        let mut e: Vec<(TupleId, TupleId)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |j| **j > i).map(move |j| (i, *j)))
            .map(|(i, j)| (self.ids[i].min(self.ids[j]), self.ids[i].max(self.ids[j])))
            .collect();
        e.sort_unstable();
        e
    }
}

/// O(n²) pair scan.
pub fn build_graph(tuples: &[Tuple], spec: &SimilaritySpec) -> SimilarityGraph {
    let n = tuples.len();
    let mut adj = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if spec.similar(&tuples[i].point, &tuples[j].point) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    SimilarityGraph { ids: tuples.iter().map(|t| t.id).collect(), adj }
}

/// All maximal cliques (isolated vertices as singletons), each sorted by id,
/// in lexicographic order. Bron–Kerbosch with Tomita pivoting.
pub fn maximal_cliques(g: &SimilarityGraph) -> Vec<Vec<TupleId>> {
    fn expand(g: &SimilarityGraph, r: &mut Vec<usize>, mut p: BTreeSet<usize>, mut x: BTreeSet<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return;
        }
        let pivot = *p
            .iter()
            .chain(x.iter())
            .max_by_key(|u| p.intersection(&g.adj[**u]).count())
            .expect("p or x nonempty");
        let branch: Vec<usize> = p.difference(&g.adj[pivot]).copied().collect();
        for v in branch {
            r.push(v);
            let np = p.intersection(&g.adj[v]).copied().collect();
            let nx = x.intersection(&g.adj[v]).copied().collect();
            expand(g, r, np, nx, out);
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
    }
    let mut raw = Vec::new();
    if g.ids.is_empty() {
        return raw;
    }
    expand(g, &mut Vec::new(), (0..g.ids.len()).collect(), BTreeSet::new(), &mut raw);
    let mut cliques: Vec<Vec<TupleId>> = raw
        .into_iter()
        .map(|c| {
            let mut ids: Vec<TupleId> = c.into_iter().map(|v| g.ids[v]).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    cliques.sort_unstable();
    cliques
}

/// Maximal cliques by testing every vertex subset. Exponential; for
/// cross-checking [`maximal_cliques`] on tiny graphs.
pub fn maximal_cliques_by_subsets(g: &SimilarityGraph) -> Vec<Vec<TupleId>> {
    let n = g.ids.len();
    assert!(n <= 20, "subset enumeration is limited to 20 vertices");
    let is_clique = |mask: u32| {
        (0..n).filter(|i| mask >> i & 1 == 1).all(|i| {
            (i + 1..n).filter(|j| mask >> j & 1 == 1).all(|j| g.adj[i].contains(&j))
        })
    };
    let cliques: Vec<u32> = (1u32..(1 << n)).filter(|m| is_clique(*m)).collect();
    let mut out: Vec<Vec<TupleId>> = cliques
        .iter()
        .filter(|m| !cliques.iter().any(|o| *o != **m && *o & **m == **m))
        .map(|m| {
            let mut ids: Vec<TupleId> = (0..n).filter(|i| m >> i & 1 == 1).map(|i| g.ids[i]).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    out.sort_unstable();
    out
}

fn overlap_set(groups: &[Vec<TupleId>]) -> Vec<TupleId> {
    let mut seen = BTreeSet::new();
    let mut over = BTreeSet::new();
    for g in groups {
        for id in g {
            if !seen.insert(*id) {
                over.insert(*id);
            }
        }
    }
    over.into_iter().collect()
}

pub fn oracle_duplicate(tuples: &[Tuple], spec: &SimilaritySpec) -> GroupSet {
    let groups = maximal_cliques(&build_graph(tuples, spec));
    let oset = overlap_set(&groups);
    canonicalize(GroupSet { groups, oset, policy: Policy::Duplicate })
}

pub fn oracle_eliminate(tuples: &[Tuple], spec: &SimilaritySpec) -> GroupSet {
    let dup = oracle_duplicate(tuples, spec);
    let groups = dup
        .groups
        .into_iter()
        .map(|c| c.into_iter().filter(|id| !dup.oset.contains(id)).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();
    canonicalize(GroupSet { groups, oset: Vec::new(), policy: Policy::Eliminate })
}

/// `eliminate(T) ∪ new_group(OSet(T))`, ending at an empty overlap set. If
/// the overlap set is all of `T` no round can shrink it; those tuples become
/// singletons.
pub fn oracle_new_group(tuples: &[Tuple], spec: &SimilaritySpec) -> GroupSet {
    let dup = oracle_duplicate(tuples, spec);
    let mut groups = if !tuples.is_empty() && dup.oset.len() == tuples.len() {
        tuples.iter().map(|t| vec![t.id]).collect()
    } else {
        let mut groups = oracle_eliminate(tuples, spec).groups;
        if !dup.oset.is_empty() {
            let rest: Vec<Tuple> = tuples.iter().filter(|t| dup.oset.contains(&t.id)).cloned().collect();
            groups.extend(oracle_new_group(&rest, spec).groups);
        }
        groups
    };
    groups.sort_unstable();
    canonicalize(GroupSet { groups, oset: Vec::new(), policy: Policy::NewGroup })
}

pub fn oracle(tuples: &[Tuple], spec: &SimilaritySpec, policy: Policy) -> GroupSet {
    match policy {
        Policy::Duplicate => oracle_duplicate(tuples, spec),
        Policy::Eliminate => oracle_eliminate(tuples, spec),
        Policy::NewGroup => oracle_new_group(tuples, spec),
    }
}

/// Two presentation orders that produced different outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub order_a: Vec<TupleId>,
    pub output_a: GroupSet,
    pub order_b: Vec<TupleId>,
    pub output_b: GroupSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass { orders_checked: usize },
    Fail(alloc::boxed::Box<Witness>),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

/// Compares canonical outputs of `run` over `orders` against the first.
fn compare_orders<I, F>(tuples: &[Tuple], orders: I, mut run: F) -> Result<Verdict>
where
    I: IntoIterator<Item = Vec<usize>>,
    F: FnMut(&[Tuple]) -> Result<GroupSet>,
{
    let mut baseline: Option<(Vec<TupleId>, GroupSet)> = None;
    let mut checked = 0;
    for order in orders {
        let shuffled: Vec<Tuple> = order.iter().map(|i| tuples[*i].clone()).collect();
        let out = canonicalize(run(&shuffled)?);
        let ids: Vec<TupleId> = shuffled.iter().map(|t| t.id).collect();
        checked += 1;
        match &baseline {
            None => baseline = Some((ids, out)),
            Some((base_ids, base_out)) if *base_out != out => {
                return Ok(Verdict::Fail(alloc::boxed::Box::new(Witness {
                    order_a: base_ids.clone(),
                    output_a: base_out.clone(),
                    order_b: ids,
                    output_b: out,
                })));
            }
            Some(_) => {}
        }
    }
    Ok(Verdict::Pass { orders_checked: checked })
}

/// Runs `run` on the input order and `num_perms` seeded shuffles.
pub fn permutation_check_with<F>(tuples: &[Tuple], num_perms: usize, seed: u64, run: F) -> Result<Verdict>
where
    F: FnMut(&[Tuple]) -> Result<GroupSet>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = tuples.len();
    let orders = core::iter::once((0..n).collect::<Vec<_>>()).chain((0..num_perms).map(move |_| {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        order
    }));
    compare_orders(tuples, orders, run)
}

/// Runs `run` on all `n!` orders.
pub fn exhaustive_permutation_check_with<F>(tuples: &[Tuple], run: F) -> Result<Verdict>
where
    F: FnMut(&[Tuple]) -> Result<GroupSet>,
{
    let n = tuples.len();
    compare_orders(tuples, (0..n).permutations(n), run)
}

/// Permutation check of the engine itself.
pub fn permutation_check(
    tuples: &[Tuple],
    spec: SimilaritySpec,
    policy: Policy,
    config: EngineConfig,
    num_perms: usize,
    seed: u64,
) -> Result<Verdict> {
    permutation_check_with(tuples, num_perms, seed, |ts| run_with_config(ts, spec, policy, config))
}

/// Greedy first-fit grouping: each tuple joins the first group whose members
/// are all within ε, else starts a new one. Order-dependent, so it serves as
/// a known-bad operator for exercising the permutation harness.
pub fn first_fit_grouping(tuples: &[Tuple], spec: &SimilaritySpec) -> GroupSet {
    let mut groups: Vec<Vec<&Tuple>> = Vec::new();
    for t in tuples {
        match groups.iter_mut().find(|g| g.iter().all(|m| spec.similar(&m.point, &t.point))) {
            Some(g) => g.push(t),
            None => groups.push(vec![t]),
        }
    }
    let groups = groups.into_iter().map(|g| g.into_iter().map(|t| t.id).collect()).collect();
    canonicalize(GroupSet { groups, oset: Vec::new(), policy: Policy::Eliminate })
}
