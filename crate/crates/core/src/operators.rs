//! Tree construction and mutation: degree-capped Kruskal and the
//! preserve-ancestor prune/graft move.

use thiserror::Error;

use crate::graph::{DegreeConstraint, NodeId, WeightedGraph};
use crate::nde::{encode, parents_from_edges, NdeEntry, NdeTree};
use crate::rng::Xoshiro256;
use crate::union_find::UnionFind;

/// Scan attempts before [`kruskal_constrained`] gives up.
pub const KRUSKAL_ATTEMPTS: u32 = 32;
/// Prune-point draws before [`pao`] reports that no move exists.
pub const PAO_ATTEMPTS: u32 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OperatorError {
    #[error("degree-capped Kruskal found no spanning tree in {attempts} attempts")]
    ConstructionFailed { attempts: u32 },
    #[error("stale move: {0}")]
    StaleMove(String),
}

/// One prune-and-graft: detach the subtree at `prune_index` from
/// `old_parent` and hang it under `attach_node`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PaoMove {
    pub prune_index: usize,
    pub prune_node: NodeId,
    pub old_parent: NodeId,
    pub attach_node: NodeId,
    /// `w(attach_node, prune_node) - w(old_parent, prune_node)`.
    pub delta: i64,
    pub seed: u64,
}

impl PaoMove {
    /// The three-word wire record of this move.
    pub fn record(&self) -> MoveRecord {
        MoveRecord {
            prune_node: self.prune_node,
            attach_node: self.attach_node,
            delta: self.delta,
            seed: self.seed,
        }
    }
}

/// Position-free form of a move as it travels between processes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MoveRecord {
    pub prune_node: NodeId,
    pub attach_node: NodeId,
    pub delta: i64,
    pub seed: u64,
}

impl MoveRecord {
    /// `[(prune_node << 32) | attach_node, delta, seed]`.
    pub fn to_words(&self) -> [u64; 3] {
        [
            (u64::from(self.prune_node) << 32) | u64::from(self.attach_node),
            self.delta as u64,
            self.seed,
        ]
    }

    pub fn from_words(words: [u64; 3]) -> Self {
        MoveRecord {
            prune_node: (words[0] >> 32) as NodeId,
            attach_node: words[0] as NodeId,
            delta: words[1] as i64,
            seed: words[2],
        }
    }

    /// Re-derives the positional fields against the tree the move was drawn on.
    pub fn resolve(&self, t: &NdeTree, g: &WeightedGraph) -> Result<PaoMove, OperatorError> {
        let n = t.len();
        if self.prune_node as usize >= n || self.attach_node as usize >= n {
            return Err(OperatorError::StaleMove(format!(
                "nodes ({}, {}) outside tree of {n}",
                self.prune_node, self.attach_node
            )));
        }
        let prune_index = t.position(self.prune_node);
        let old_parent = t
            .parent_at(prune_index)
            .ok_or_else(|| OperatorError::StaleMove("move prunes the root".into()))?;
        Ok(PaoMove {
            prune_index,
            prune_node: self.prune_node,
            old_parent,
            attach_node: self.attach_node,
            delta: move_delta(g, self.prune_node, old_parent, self.attach_node)?,
            seed: self.seed,
        })
    }
}

fn move_delta(g: &WeightedGraph, prune: NodeId, old_parent: NodeId, attach: NodeId) -> Result<i64, OperatorError> {
    let missing = |a: NodeId, b: NodeId| OperatorError::StaleMove(format!("({a}, {b}) is not a graph edge"));
    let removed = g.weight(old_parent, prune).ok_or_else(|| missing(old_parent, prune))?;
    let added = g.weight(attach, prune).ok_or_else(|| missing(attach, prune))?;
    Ok(i64::from(added) - i64::from(removed))
}

/// Kruskal's scan with an extra rejection for edges that would push either
/// endpoint past `dmax`.
///
/// The first attempt scans by ascending weight with equal weights shuffled.
/// Retries add uniform noise in `[0, wmax - wmin]` to each sort key, so a
/// failed greedy pass is followed by weight-biased random orders rather
/// than the same order again. The result is rooted at node 0.
pub fn kruskal_constrained(g: &WeightedGraph, c: DegreeConstraint, seed: u64) -> Result<NdeTree, OperatorError> {
    let n = g.node_count();
    let edges = g.edges();
    let (wmin, wmax) = edges
        .iter()
        .fold((u64::MAX, 0u64), |(lo, hi), e| (lo.min(e.w.into()), hi.max(e.w.into())));
    let span = wmax - wmin + 1;
    let mut rng = Xoshiro256::from_seed(seed);
    let mut keyed: Vec<(u64, u64, u32)> = Vec::with_capacity(edges.len());
    let mut chosen: Vec<(NodeId, NodeId)> = Vec::with_capacity(n - 1);
    for attempt in 0..KRUSKAL_ATTEMPTS {
        keyed.clear();
        for (i, e) in edges.iter().enumerate() {
            let jitter = if attempt > 0 { rng.below(span) } else { 0 };
            keyed.push((u64::from(e.w) + jitter, rng.next_u64(), i as u32));
        }
        keyed.sort_unstable();

        let mut uf = UnionFind::new(n);
        let mut degree = vec![0u32; n];
        chosen.clear();
        for &(_, _, i) in &keyed {
            let e = edges[i as usize];
            let (u, v) = (e.u as usize, e.v as usize);
            if degree[u] < c.dmax() && degree[v] < c.dmax() && uf.union(e.u, e.v) {
                degree[u] += 1;
                degree[v] += 1;
                chosen.push((e.u, e.v));
                if chosen.len() == n - 1 {
                    break;
                }
            }
        }
        if chosen.len() == n - 1 {
            let parents = parents_from_edges(n, &chosen, 0);
            return Ok(encode(&parents, g).expect("Kruskal output is a spanning tree of g"));
        }
    }
    Err(OperatorError::ConstructionFailed { attempts: KRUSKAL_ATTEMPTS })
}

/// Draws one preserve-ancestor move on `t`, or `None` if sixteen prune
/// draws all found no legal attach point.
///
/// A prune index `p >= 1` is drawn uniformly; the attach candidates are the
/// graph neighbours of the pruned node that lie outside its subtree, are not
/// its current parent, and still have spare degree. One candidate is drawn
/// uniformly. Pure in `(t, seed)`.
pub fn pao(t: &NdeTree, g: &WeightedGraph, c: DegreeConstraint, seed: u64) -> Option<PaoMove> {
    let n = t.len();
    if n < 2 {
        return None;
    }
    let mut rng = Xoshiro256::from_seed(seed);
    for _ in 0..PAO_ATTEMPTS {
        let p = 1 + rng.index(n - 1);
        let range = t.subtree_range(p);
        let prune = t.entries()[p].node;
        let old_parent = t.parent_at(p).expect("non-root entry has a parent");
        let legal = |&&(a, _): &&(NodeId, u32)| {
            a != old_parent && !range.contains(t.position(a)) && t.degree(a) < c.dmax()
        };
        let count = g.neighbors(prune).iter().filter(legal).count();
        if count == 0 {
            continue;
        }
        let pick = rng.index(count);
        let &(attach, w_new) = g.neighbors(prune).iter().filter(legal).nth(pick).expect("pick < count");
        let w_old = g.weight(old_parent, prune).expect("tree edge is a graph edge");
        return Some(PaoMove {
            prune_index: p,
            prune_node: prune,
            old_parent,
            attach_node: attach,
            delta: i64::from(w_new) - i64::from(w_old),
            seed,
        });
    }
    None
}

/// Applies `m` to a copy of `t`.
///
/// The pruned slice is removed and reinserted directly after the attach
/// node's entry, depths rebased so the pruned node sits one level below it.
/// Fails with `StaleMove` if `m` no longer describes a legal move on `t`.
pub fn apply_move(t: &NdeTree, m: &PaoMove, g: &WeightedGraph, c: DegreeConstraint) -> Result<NdeTree, OperatorError> {
    let n = t.len();
    let stale = |why: String| Err(OperatorError::StaleMove(why));
    if m.prune_index == 0 || m.prune_index >= n {
        return stale(format!("prune index {} outside 1..{n}", m.prune_index));
    }
    if t.entries()[m.prune_index].node != m.prune_node {
        return stale(format!("node {} is no longer at index {}", m.prune_node, m.prune_index));
    }
    if t.parent_at(m.prune_index) != Some(m.old_parent) {
        return stale(format!("node {} is no longer a child of {}", m.prune_node, m.old_parent));
    }
    if m.attach_node as usize >= n || m.attach_node == m.old_parent {
        return stale(format!("attach node {} is not a new parent", m.attach_node));
    }
    let range = t.subtree_range(m.prune_index);
    let attach_index = t.position(m.attach_node);
    if range.contains(attach_index) {
        return stale(format!("attach node {} lies inside the pruned subtree", m.attach_node));
    }
    if t.degree(m.attach_node) >= c.dmax() {
        return stale(format!("attach node {} is at the degree cap", m.attach_node));
    }
    let delta = move_delta(g, m.prune_node, m.old_parent, m.attach_node)?;
    if delta != m.delta {
        return stale(format!("delta {} no longer matches {delta}", m.delta));
    }

    let entries = t.entries();
    let base = i64::from(entries[attach_index].depth) + 1 - i64::from(entries[m.prune_index].depth);
    let mut moved = Vec::with_capacity(n);
    for (i, &e) in entries.iter().enumerate() {
        if range.contains(i) {
            continue;
        }
        moved.push(e);
        if i == attach_index {
            moved.extend(
                entries[range.start..range.end]
                    .iter()
                    .map(|s| NdeEntry::new(s.node, (i64::from(s.depth) + base) as u32)),
            );
        }
    }
    let mut degrees = t.degrees().to_vec();
    degrees[m.old_parent as usize] -= 1;
    degrees[m.attach_node as usize] += 1;
    let weight = (t.weight() as i64 + delta) as u64;
    let next = NdeTree::assemble(moved, weight, degrees);
    debug_assert_eq!(crate::nde::validate(&next, g), Ok(()));
    Ok(next)
}
