//! Evolutionary search for degree-constrained minimum spanning trees using
//! the node-depth encoding.
//!
//! - [`graph`]: instances, the edge-list format and the random generator.
//! - [`oracle`]: exact Kruskal MST and brute-force DC-MST references.
//! - [`nde`]: the `(node, depth)` preorder list and its subtree slices.
//! - [`operators`]: degree-capped Kruskal and the preserve-ancestor move.
//! - [`engine`]: population, seed schedule, trial pools and the main loop.

pub mod engine;
pub mod graph;
pub mod hash;
pub mod nde;
pub mod operators;
pub mod oracle;
pub mod rng;
pub mod sample;
mod union_find;

pub use engine::{
    init_population, run, BestTrial, EaConfig, EngineError, LocalPool, Population, SeedSchedule, Solver,
    SolveReport, TrialJob, TrialPool,
};
pub use graph::{
    generate_random_graph, load_graph, parse_graph, DegreeConstraint, Edge, GraphError, NodeId, ValidationError, WeightedGraph,
};
pub use nde::{decode, encode, subtree_range, validate, NdeEntry, NdeError, NdeTree, ParentArray, SubtreeRange, Violation};
pub use operators::{apply_move, kruskal_constrained, pao, MoveRecord, OperatorError, PaoMove};
pub use oracle::{dcmst_bruteforce, mst_weight_reference, DcmstOutcome, OracleError};
