//! Node-depth encoding of spanning trees.
//!
//! A tree is a list of `(node, depth)` pairs in depth-first preorder. Every
//! subtree is a contiguous slice of that list, which is what makes prune and
//! graft cheap.

use thiserror::Error;

use crate::graph::{DegreeConstraint, NodeId, WeightedGraph};

/// Per-node parent ids; `None` marks the root.
pub type ParentArray = Vec<Option<NodeId>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NdeEntry {
    pub node: NodeId,
    pub depth: u32,
}

impl NdeEntry {
    pub fn new(node: NodeId, depth: u32) -> Self {
        NdeEntry { node, depth }
    }

    /// Wire packing: depth in the high 32 bits, node id in the low 32 bits.
    pub fn to_word(self) -> u64 {
        (u64::from(self.depth) << 32) | u64::from(self.node)
    }

    pub fn from_word(word: u64) -> Self {
        NdeEntry { node: word as u32, depth: (word >> 32) as u32 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NdeError {
    #[error("parent array does not describe a tree: {0}")]
    NotATree(String),
    #[error("parent array covers {actual} nodes, graph has {expected}")]
    NotSpanning { expected: usize, actual: usize },
    #[error("tree edge ({0}, {1}) is not in the graph")]
    NotAGraphEdge(NodeId, NodeId),
    #[error("invalid encoding at index {index}: {reason}")]
    InvalidEncoding { index: usize, reason: String },
}

/// First invariant violation found by [`validate`].
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum Violation {
    #[error("tree has {actual} entries, graph has {expected} nodes")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("entry 0 has depth {depth}, root must have depth 0")]
    RootDepth { depth: u32 },
    #[error("entry {index} has depth {depth} after depth {previous}")]
    DepthStep { index: usize, depth: u32, previous: u32 },
    #[error("entry {index} holds node {node}, outside the graph")]
    NodeOutOfRange { index: usize, node: NodeId },
    #[error("node {node} appears twice (second at index {index})")]
    DuplicateNode { index: usize, node: NodeId },
    #[error("entry {index} implies edge ({parent}, {child}) which is not in the graph")]
    NotAGraphEdge { index: usize, parent: NodeId, child: NodeId },
    #[error("cached weight {cached} differs from recomputed {actual}")]
    WeightMismatch { cached: u64, actual: u64 },
    #[error("cached degree {cached} of node {node} differs from recomputed {actual}")]
    DegreeMismatch { node: NodeId, cached: u32, actual: u32 },
}

/// Half-open slice `[start, end)` of entries forming one subtree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubtreeRange {
    pub start: usize,
    pub end: usize,
}

impl SubtreeRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }
}

/// A spanning tree in node-depth encoding with cached weight and degrees.
///
/// Two trees compare equal when they have the same root and the same edge
/// set; sibling order is representation only.
#[derive(Clone, Debug)]
pub struct NdeTree {
    entries: Vec<NdeEntry>,
    weight: u64,
    degrees: Vec<u32>,
    positions: Vec<u32>,
}

impl NdeTree {
    /// Builds a tree from raw entries, checking every invariant against `g`.
    pub fn from_entries(entries: Vec<NdeEntry>, g: &WeightedGraph) -> Result<Self, Violation> {
        let (weight, degrees) = scan(&entries, g)?;
        Ok(Self::assemble(entries, weight, degrees))
    }

    /// Decodes the wire form (one word per entry) and validates it.
    pub fn from_words(words: &[u64], g: &WeightedGraph) -> Result<Self, Violation> {
        Self::from_entries(words.iter().map(|&w| NdeEntry::from_word(w)).collect(), g)
    }

    pub(crate) fn assemble(entries: Vec<NdeEntry>, weight: u64, degrees: Vec<u32>) -> Self {
        let mut positions = vec![u32::MAX; entries.len()];
        for (i, e) in entries.iter().enumerate() {
            if let Some(slot) = positions.get_mut(e.node as usize) {
                *slot = i as u32;
            }
        }
        NdeTree { entries, weight, degrees, positions }
    }

    pub fn entries(&self) -> &[NdeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.entries[0].node
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn degree(&self, v: NodeId) -> u32 {
        self.degrees[v as usize]
    }

    /// Index of `v` in the entry list.
    pub fn position(&self, v: NodeId) -> usize {
        self.positions[v as usize] as usize
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn satisfies(&self, c: DegreeConstraint) -> bool {
        c.allows(self.max_degree())
    }

    /// Parent node of the entry at `index`: the nearest earlier entry one level up.
    pub fn parent_at(&self, index: usize) -> Option<NodeId> {
        let depth = self.entries[index].depth;
        if depth == 0 {
            return None;
        }
        self.entries[..index]
            .iter()
            .rev()
            .find(|e| e.depth == depth - 1)
            .map(|e| e.node)
    }

    pub fn subtree_range(&self, p: usize) -> SubtreeRange {
        subtree_range(self, p)
    }

    pub fn parents(&self) -> ParentArray {
        decode(&self.entries).expect("NdeTree entries are valid by construction")
    }

    /// Canonical `(min, max)` edge list, sorted.
    pub fn edge_set(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges: Vec<_> = self
            .parents()
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p.min(v as NodeId), p.max(v as NodeId))))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn to_words(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.to_word()).collect()
    }
}

impl PartialEq for NdeTree {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.root() == other.root()
            && self.weight == other.weight
            && self.edge_set() == other.edge_set()
    }
}

impl Eq for NdeTree {}

/// Preorder encoding of a parent array, children visited in ascending id.
pub fn encode(parents: &[Option<NodeId>], g: &WeightedGraph) -> Result<NdeTree, NdeError> {
    let n = g.node_count();
    if parents.len() != n {
        return Err(NdeError::NotSpanning { expected: n, actual: parents.len() });
    }
    let mut root = None;
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (v, parent) in parents.iter().enumerate() {
        match *parent {
            None if root.is_some() => {
                return Err(NdeError::NotATree(format!("second root at node {v}")));
            }
            None => root = Some(v as NodeId),
            Some(p) if p as usize >= n => {
                return Err(NdeError::NotATree(format!("node {v} has out-of-range parent {p}")));
            }
            Some(p) => {
                if g.weight(p, v as NodeId).is_none() {
                    return Err(NdeError::NotAGraphEdge(p, v as NodeId));
                }
                children[p as usize].push(v as NodeId);
            }
        }
    }
    let root = root.ok_or_else(|| NdeError::NotATree("no root".into()))?;

    let mut entries = Vec::with_capacity(n);
    let mut weight = 0u64;
    let mut degrees = vec![0u32; n];
    let mut stack = vec![(root, 0u32)];
    while let Some((v, depth)) = stack.pop() {
        entries.push(NdeEntry::new(v, depth));
        for &c in children[v as usize].iter().rev() {
            stack.push((c, depth + 1));
        }
        if let Some(p) = parents[v as usize] {
            weight += u64::from(g.weight(p, v).unwrap_or_default());
            degrees[p as usize] += 1;
            degrees[v as usize] += 1;
        }
        if entries.len() > n {
            break;
        }
    }
    if entries.len() != n {
        return Err(NdeError::NotATree(format!(
            "only {} of {n} nodes reachable from root {root} (cycle)",
            entries.len()
        )));
    }
    Ok(NdeTree::assemble(entries, weight, degrees))
}

/// Reads the parent of every node back out of an entry list.
pub fn decode(entries: &[NdeEntry]) -> Result<ParentArray, NdeError> {
    let n = entries.len();
    let invalid = |index: usize, reason: String| NdeError::InvalidEncoding { index, reason };
    let first = entries.first().ok_or_else(|| invalid(0, "empty list".into()))?;
    if first.depth != 0 {
        return Err(invalid(0, format!("root depth {}", first.depth)));
    }
    let mut parents: ParentArray = vec![None; n];
    let mut seen = vec![false; n];
    let mut ancestors: Vec<NodeId> = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        if e.node as usize >= n {
            return Err(invalid(i, format!("node {} out of range", e.node)));
        }
        if std::mem::replace(&mut seen[e.node as usize], true) {
            return Err(invalid(i, format!("node {} repeated", e.node)));
        }
        if i > 0 {
            let prev = entries[i - 1].depth;
            if e.depth == 0 || e.depth > prev + 1 {
                return Err(invalid(i, format!("depth {} after {prev}", e.depth)));
            }
            parents[e.node as usize] = Some(ancestors[e.depth as usize - 1]);
        }
        ancestors.truncate(e.depth as usize);
        ancestors.push(e.node);
    }
    Ok(parents)
}

/// Orients an undirected tree edge list away from `root`.
///
/// Nodes not reached from `root` keep `None`, so a disconnected edge list
/// shows up as extra roots when passed to [`encode`].
pub fn parents_from_edges(n: usize, edges: &[(NodeId, NodeId)], root: NodeId) -> ParentArray {
    let mut adjacent: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        adjacent[u as usize].push(v);
        adjacent[v as usize].push(u);
    }
    let mut parents: ParentArray = vec![None; n];
    let mut visited = vec![false; n];
    visited[root as usize] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adjacent[v as usize] {
            if !std::mem::replace(&mut visited[w as usize], true) {
                parents[w as usize] = Some(v);
                queue.push_back(w);
            }
        }
    }
    parents
}

/// The contiguous subtree rooted at entry `p`.
pub fn subtree_range(t: &NdeTree, p: usize) -> SubtreeRange {
    let entries = t.entries();
    let depth = entries[p].depth;
    let end = entries[p + 1..]
        .iter()
        .position(|e| e.depth <= depth)
        .map_or(entries.len(), |off| p + 1 + off);
    SubtreeRange { start: p, end }
}

/// Checks every invariant of `t` against `g`, including the cached weight
/// and degrees.
pub fn validate(t: &NdeTree, g: &WeightedGraph) -> Result<(), Violation> {
    let (weight, degrees) = scan(&t.entries, g)?;
    if weight != t.weight {
        return Err(Violation::WeightMismatch { cached: t.weight, actual: weight });
    }
    if t.degrees.len() != degrees.len() {
        return Err(Violation::LengthMismatch { expected: degrees.len(), actual: t.degrees.len() });
    }
    for (v, (&cached, &actual)) in t.degrees.iter().zip(&degrees).enumerate() {
        if cached != actual {
            return Err(Violation::DegreeMismatch { node: v as NodeId, cached, actual });
        }
    }
    Ok(())
}

/// Structural pass shared by construction and validation: returns the
/// recomputed weight and degrees.
fn scan(entries: &[NdeEntry], g: &WeightedGraph) -> Result<(u64, Vec<u32>), Violation> {
    let n = g.node_count();
    if entries.len() != n {
        return Err(Violation::LengthMismatch { expected: n, actual: entries.len() });
    }
    if entries[0].depth != 0 {
        return Err(Violation::RootDepth { depth: entries[0].depth });
    }
    let mut seen = vec![false; n];
    let mut degrees = vec![0u32; n];
    let mut weight = 0u64;
    let mut ancestors: Vec<NodeId> = Vec::new();
    for (index, e) in entries.iter().enumerate() {
        if e.node as usize >= n {
            return Err(Violation::NodeOutOfRange { index, node: e.node });
        }
        if std::mem::replace(&mut seen[e.node as usize], true) {
            return Err(Violation::DuplicateNode { index, node: e.node });
        }
        if index > 0 {
            let previous = entries[index - 1].depth;
            if e.depth == 0 || e.depth > previous + 1 {
                return Err(Violation::DepthStep { index, depth: e.depth, previous });
            }
            let parent = ancestors[e.depth as usize - 1];
            let w = g.weight(parent, e.node).ok_or(Violation::NotAGraphEdge {
                index,
                parent,
                child: e.node,
            })?;
            weight += u64::from(w);
            degrees[parent as usize] += 1;
            degrees[e.node as usize] += 1;
        }
        ancestors.truncate(e.depth as usize);
        ancestors.push(e.node);
    }
    Ok((weight, degrees))
}
