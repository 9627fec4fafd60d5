//! Problem instances: weighted undirected graphs and the edge-list format.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::rng::Xoshiro256;
use crate::union_find::UnionFind;

pub type NodeId = u32;

/// Largest weight produced by [`generate_random_graph`].
pub const MAX_GENERATED_WEIGHT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: u32,
}

impl Edge {
    pub fn new(u: NodeId, v: NodeId, w: u32) -> Self {
        Edge { u, v, w }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("graph has {0} nodes, more than 32-bit node ids allow")]
    TooManyNodes(usize),
    #[error("edge ({u}, {v}) references a node outside 0..{n}")]
    NodeOutOfRange { u: u64, v: u64, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("weight {0} does not fit in 32 bits")]
    WeightOverflow(u64),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Connected undirected graph with 32-bit non-negative integer weights.
///
/// Edges are stored canonically with `u < v`, in input order. The adjacency
/// lists are sorted by neighbour id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(NodeId, u32)>>,
}

impl WeightedGraph {
    /// Builds and validates a graph. Endpoint order within an edge is irrelevant.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, ValidationError> {
        if n < 2 {
            return Err(ValidationError::TooFewNodes(n));
        }
        if n > u32::MAX as usize {
            return Err(ValidationError::TooManyNodes(n));
        }
        let mut seen = HashSet::new();
        let mut canonical = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        let mut uf = UnionFind::new(n);
        for e in edges {
            if e.u as usize >= n || e.v as usize >= n {
                return Err(ValidationError::NodeOutOfRange { u: e.u.into(), v: e.v.into(), n });
            }
            if e.u == e.v {
                return Err(ValidationError::SelfLoop(e.u));
            }
            let (u, v) = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert((u, v)) {
                return Err(ValidationError::DuplicateEdge(u, v));
            }
            adjacency[u as usize].push((v, e.w));
            adjacency[v as usize].push((u, e.w));
            uf.union(u, v);
            canonical.push(Edge::new(u, v, e.w));
        }
        if uf.set_count() != 1 {
            return Err(ValidationError::Disconnected { components: uf.set_count() });
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(WeightedGraph { n, edges: canonical, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `v` with the connecting edge weight, ascending by id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, u32)] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v as usize].len()
    }

    /// Weight of edge `{u, v}`, if present.
    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<u32> {
        if u as usize >= self.n || v as usize >= self.n {
            return None;
        }
        let (from, to) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        let list = &self.adjacency[from as usize];
        list.binary_search_by_key(&to, |&(x, _)| x).ok().map(|i| list[i].1)
    }

    /// Renders the graph in the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(16 * (self.edges.len() + 1));
        let _ = writeln!(out, "{}", self.n);
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
        }
        out
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

/// Uniform degree cap applied to every node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DegreeConstraint {
    dmax: u32,
}

impl DegreeConstraint {
    pub fn new(dmax: u32) -> Result<Self, GraphError> {
        if dmax == 0 {
            return Err(GraphError::InvalidParameter("dmax must be at least 1".into()));
        }
        Ok(DegreeConstraint { dmax })
    }

    /// The cap that never binds on an `n`-node graph.
    pub fn unconstrained(n: usize) -> Self {
        DegreeConstraint { dmax: (n.saturating_sub(1)).max(1) as u32 }
    }

    pub fn dmax(self) -> u32 {
        self.dmax
    }

    pub fn allows(self, degree: u32) -> bool {
        degree <= self.dmax
    }

    pub fn is_unconstrained_for(self, n: usize) -> bool {
        self.dmax as usize >= n.saturating_sub(1)
    }
}

/// Parses the edge-list text format.
///
/// The first non-comment, non-empty line holds `n`; every following one holds
/// `u v w`. Lines starting with `#` are comments. LF and CRLF both work.
pub fn parse_graph(text: &str) -> Result<WeightedGraph, GraphError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| GraphError::Parse { line: line_no, message };
        match n {
            None => {
                let count = line
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("bad node count {line:?}: {e}")))?;
                n = Some(count);
            }
            Some(_) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(parse_err(format!("expected \"u v w\", got {line:?}")));
                }
                let num = |s: &str, what: &str| {
                    s.parse::<u64>().map_err(|e| parse_err(format!("bad {what} {s:?}: {e}")))
                };
                let (u, v, w) = (num(fields[0], "node")?, num(fields[1], "node")?, num(fields[2], "weight")?);
                let n = n.unwrap_or_default();
                if u >= n as u64 || v >= n as u64 {
                    return Err(ValidationError::NodeOutOfRange { u, v, n }.into());
                }
                let w = u32::try_from(w).map_err(|_| ValidationError::WeightOverflow(w))?;
                edges.push(Edge::new(u as NodeId, v as NodeId, w));
            }
        }
    }
    let n = n.ok_or_else(|| GraphError::Parse { line: 1, message: "missing node count".into() })?;
    Ok(WeightedGraph::new(n, edges)?)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<WeightedGraph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}

/// Seeded random connected graph.
///
/// A random recursive tree over a shuffled node order guarantees
/// connectivity; distinct random extra edges are then added until the edge
/// count reaches `round(density * n * (n - 1) / 2)`. Weights are uniform in
/// `1..=1_000_000`.
pub fn generate_random_graph(n: usize, density: f64, seed: u64) -> Result<WeightedGraph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(GraphError::InvalidParameter(format!("density {density} outside (0, 1]")));
    }
    let total = n as u64 * (n as u64 - 1) / 2;
    let target = (density * total as f64).round() as u64;
    if target < n as u64 - 1 {
        return Err(GraphError::InvalidParameter(format!(
            "density {density} gives {target} edges, fewer than the {} needed to connect {n} nodes",
            n - 1
        )));
    }

    let mut rng = Xoshiro256::from_seed(seed);
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    rng.shuffle(&mut order);

    let key = |a: NodeId, b: NodeId| (u64::from(a.min(b)) << 32) | u64::from(a.max(b));
    let mut present = HashSet::with_capacity(target as usize);
    let mut edges = Vec::with_capacity(target as usize);
    for i in 1..n {
        let child = order[i];
        let parent = order[rng.index(i)];
        present.insert(key(child, parent));
        let w = rng.range_inclusive(1, MAX_GENERATED_WEIGHT) as u32;
        edges.push(Edge::new(child, parent, w));
    }

    let extra = target - (n as u64 - 1);
    let free = total - (n as u64 - 1);
    if extra <= free / 2 {
        while (edges.len() as u64) < target {
            let (u, v) = (rng.index(n) as NodeId, rng.index(n) as NodeId);
            if u == v || !present.insert(key(u, v)) {
                continue;
            }
            let w = rng.range_inclusive(1, MAX_GENERATED_WEIGHT) as u32;
            edges.push(Edge::new(u, v, w));
        }
    } else {
        let mut complement = Vec::with_capacity(free as usize);
        for u in 0..n as NodeId {
            for v in u + 1..n as NodeId {
                if !present.contains(&key(u, v)) {
                    complement.push((u, v));
                }
            }
        }
        rng.shuffle(&mut complement);
        for &(u, v) in complement.iter().take(extra as usize) {
            let w = rng.range_inclusive(1, MAX_GENERATED_WEIGHT) as u32;
            edges.push(Edge::new(u, v, w));
        }
    }
    Ok(WeightedGraph::new(n, edges)?)
}
