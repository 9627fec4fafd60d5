//! Random trees and instances for tests and measurements.

use crate::graph::{NodeId, WeightedGraph};
use crate::nde::{parents_from_edges, ParentArray};
use crate::rng::Xoshiro256;
use crate::union_find::UnionFind;

/// A random spanning tree of `g` (Kruskal over a shuffled edge order),
/// rooted at a random node.
pub fn random_spanning_tree(g: &WeightedGraph, seed: u64) -> ParentArray {
    let n = g.node_count();
    let mut rng = Xoshiro256::from_seed(seed);
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    rng.shuffle(&mut order);
    let mut uf = UnionFind::new(n);
    let mut chosen = Vec::with_capacity(n - 1);
    for i in order {
        let e = g.edges()[i];
        if uf.union(e.u, e.v) {
            chosen.push((e.u, e.v));
        }
    }
    let root = rng.index(n) as NodeId;
    parents_from_edges(n, &chosen, root)
}
