//! Independent reference routines shared by the integration tests. None of
//! these go through the node-depth encoding or the crate's own oracles.
#![allow(dead_code)]

use std::collections::{BinaryHeap, HashSet};
use std::cmp::Reverse;

use ndewg_core::{NodeId, WeightedGraph};

/// MST weight by Prim with a binary heap.
pub fn prim_weight(g: &WeightedGraph) -> u64 {
    let n = g.node_count();
    let mut in_tree = vec![false; n];
    let mut heap = BinaryHeap::from([Reverse((0u64, 0u32))]);
    let mut total = 0;
    while let Some(Reverse((w, v))) = heap.pop() {
        if std::mem::replace(&mut in_tree[v as usize], true) {
            continue;
        }
        total += w;
        for &(u, wu) in g.neighbors(v) {
            if !in_tree[u as usize] {
                heap.push(Reverse((u64::from(wu), u)));
            }
        }
    }
    total
}

/// Every labelled tree on `n` nodes, decoded from its Prüfer sequence.
pub fn all_labelled_trees(n: usize) -> Vec<Vec<(NodeId, NodeId)>> {
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    let mut out = Vec::with_capacity(total);
    let mut seq = vec![0usize; len];
    for mut code in 0..total {
        for slot in seq.iter_mut() {
            *slot = code % n;
            code /= n;
        }
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &s in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            edges.push((leaf as NodeId, s as NodeId));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0] as NodeId, rest[1] as NodeId));
        out.push(edges);
    }
    out
}

/// Minimum weight over spanning trees of `g` with max degree `dmax`, by
/// Prüfer enumeration of every labelled tree.
pub fn prufer_dcmst(g: &WeightedGraph, dmax: u32) -> Option<u64> {
    let n = g.node_count();
    all_labelled_trees(n)
        .into_iter()
        .filter_map(|edges| {
            let mut degree = vec![0u32; n];
            let mut total = 0u64;
            for &(u, v) in &edges {
                total += u64::from(g.weight(u, v)?);
                degree[u as usize] += 1;
                degree[v as usize] += 1;
            }
            degree.iter().all(|&d| d <= dmax).then_some(total)
        })
        .min()
}

/// Nodes in the subtree of `v` under a parent array, by walking ancestors.
pub fn subtree_nodes(parents: &[Option<NodeId>], v: NodeId) -> HashSet<NodeId> {
    (0..parents.len() as NodeId)
        .filter(|&x| {
            let mut cur = Some(x);
            while let Some(c) = cur {
                if c == v {
                    return true;
                }
                cur = parents[c as usize];
            }
            false
        })
        .collect()
}

/// Every legal preserve-ancestor move on a rooted tree as
/// `(prune, old_parent, attach, delta)`, from the parent array alone.
pub fn legal_moves(g: &WeightedGraph, parents: &[Option<NodeId>], dmax: u32) -> HashSet<(NodeId, NodeId, NodeId, i64)> {
    let n = parents.len();
    let mut degree = vec![0u32; n];
    for (v, p) in parents.iter().enumerate() {
        if let Some(p) = p {
            degree[v] += 1;
            degree[*p as usize] += 1;
        }
    }
    let mut moves = HashSet::new();
    for v in 0..n as NodeId {
        let Some(parent) = parents[v as usize] else { continue };
        let inside = subtree_nodes(parents, v);
        let w_old = i64::from(g.weight(parent, v).unwrap());
        for &(a, w) in g.neighbors(v) {
            if a != parent && !inside.contains(&a) && degree[a as usize] < dmax {
                moves.insert((v, parent, a, i64::from(w) - w_old));
            }
        }
    }
    moves
}

/// Canonical edge set of a parent array.
pub fn edge_set(parents: &[Option<NodeId>]) -> Vec<(NodeId, NodeId)> {
    let mut edges: Vec<_> = parents
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|p| (p.min(v as NodeId), p.max(v as NodeId))))
        .collect();
    edges.sort_unstable();
    edges
}

pub fn k4_golden() -> WeightedGraph {
    ndewg_core::parse_graph("4\n0 1 1\n0 2 1\n0 3 1\n1 2 10\n1 3 10\n2 3 10\n").unwrap()
}
