//! Exact reference answers used to check the evolutionary solver.

use thiserror::Error;

use crate::graph::{DegreeConstraint, Edge, WeightedGraph};
use crate::union_find::UnionFind;

/// Largest instance [`dcmst_bruteforce`] accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("brute force limited to {max} nodes, instance has {n}")]
    InstanceTooLarge { n: usize, max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcmstOutcome {
    Optimal(u64),
    Infeasible,
}

impl DcmstOutcome {
    pub fn weight(self) -> Option<u64> {
        match self {
            DcmstOutcome::Optimal(w) => Some(w),
            DcmstOutcome::Infeasible => None,
        }
    }
}

/// Exact MST weight by classic Kruskal.
pub fn mst_weight_reference(g: &WeightedGraph) -> u64 {
    let mut edges: Vec<Edge> = g.edges().to_vec();
    edges.sort_by_key(|e| e.w);
    let mut uf = UnionFind::new(g.node_count());
    let mut total = 0u64;
    let mut taken = 0;
    for e in edges {
        if uf.union(e.u, e.v) {
            total += u64::from(e.w);
            taken += 1;
            if taken + 1 == g.node_count() {
                break;
            }
        }
    }
    total
}

/// Exact degree-constrained MST weight by exhaustive search over edge subsets.
///
/// Every spanning tree is reachable by the include/exclude recursion; branches
/// are cut only when they close a cycle, exceed the cap, run out of edges, or
/// already weigh at least as much as the best tree found.
pub fn dcmst_bruteforce(g: &WeightedGraph, c: DegreeConstraint) -> Result<DcmstOutcome, OracleError> {
    let n = g.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(OracleError::InstanceTooLarge { n, max: BRUTE_FORCE_MAX_NODES });
    }
    let mut search = Search {
        edges: g.edges(),
        need: n - 1,
        dmax: c.dmax(),
        best: None,
    };
    let mut component = [0u8; BRUTE_FORCE_MAX_NODES];
    for (i, slot) in component.iter_mut().enumerate() {
        *slot = i as u8;
    }
    search.recurse(0, 0, 0, &component, &mut [0u32; BRUTE_FORCE_MAX_NODES]);
    Ok(match search.best {
        Some(w) => DcmstOutcome::Optimal(w),
        None => DcmstOutcome::Infeasible,
    })
}

struct Search<'a> {
    edges: &'a [Edge],
    need: usize,
    dmax: u32,
    best: Option<u64>,
}

impl Search<'_> {
    fn recurse(
        &mut self,
        next: usize,
        taken: usize,
        weight: u64,
        component: &[u8; BRUTE_FORCE_MAX_NODES],
        degree: &mut [u32; BRUTE_FORCE_MAX_NODES],
    ) {
        if self.best.is_some_and(|b| weight >= b) {
            return;
        }
        if taken == self.need {
            self.best = Some(weight);
            return;
        }
        if self.edges.len() - next < self.need - taken {
            return;
        }
        let e = self.edges[next];
        let (u, v) = (e.u as usize, e.v as usize);
        if component[u] != component[v] && degree[u] < self.dmax && degree[v] < self.dmax {
            let mut merged = *component;
            let (keep, drop) = (component[u], component[v]);
            for c in merged.iter_mut() {
                if *c == drop {
                    *c = keep;
                }
            }
            degree[u] += 1;
            degree[v] += 1;
            self.recurse(next + 1, taken + 1, weight + u64::from(e.w), &merged, degree);
            degree[u] -= 1;
            degree[v] -= 1;
        }
        self.recurse(next + 1, taken, weight, component, degree);
    }
}
