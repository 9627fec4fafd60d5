//! The `verify` subcommand: invariant and oracle checks on one instance.

use std::collections::BTreeSet;

use ndewg_core::engine::default_trials;
use ndewg_core::rng::splitmix64;
use ndewg_core::sample::random_spanning_tree;
use ndewg_core::{
    apply_move, dcmst_bruteforce, decode, encode, kruskal_constrained, mst_weight_reference, pao, run, validate,
    DcmstOutcome, DegreeConstraint, EaConfig, LocalPool, NdeTree, WeightedGraph,
};

/// Largest instance handed to the brute-force oracle.
pub const BRUTE_FORCE_LIMIT: usize = 10;

const ROUND_TRIP_TREES: u64 = 200;
const PAO_DRAWS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Outcome,
}

impl Check {
    pub fn failed(&self) -> bool {
        matches!(self.outcome, Outcome::Fail(_))
    }

    pub fn line(&self) -> String {
        match &self.outcome {
            Outcome::Pass(d) => format!("ok    {:<16} {d}", self.name),
            Outcome::Fail(d) => format!("FAIL  {:<16} {d}", self.name),
            Outcome::Skipped(d) => format!("skip  {:<16} {d}", self.name),
        }
    }
}

fn check(name: &'static str, result: Result<String, String>) -> Check {
    Check { name, outcome: result.map_or_else(Outcome::Fail, Outcome::Pass) }
}

fn round_trip(g: &WeightedGraph, seed: u64) -> Result<String, String> {
    for k in 0..ROUND_TRIP_TREES {
        let parents = random_spanning_tree(g, splitmix64(seed ^ k));
        let t = encode(&parents, g).map_err(|e| format!("tree {k}: encode failed: {e}"))?;
        validate(&t, g).map_err(|v| format!("tree {k}: {v}"))?;
        let back = decode(t.entries()).map_err(|e| format!("tree {k}: decode failed: {e}"))?;
        if back != parents {
            return Err(format!("tree {k}: decode(encode(p)) differs from p"));
        }
        let expected: u64 = parents
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| u64::from(g.weight(p, v as u32).unwrap_or(0))))
            .sum();
        if t.weight() != expected {
            return Err(format!("tree {k}: weight {} but edges sum to {expected}", t.weight()));
        }
    }
    Ok(format!("{ROUND_TRIP_TREES} random spanning trees"))
}

fn edge_set(t: &NdeTree) -> BTreeSet<(u32, u32)> {
    t.edge_set().into_iter().collect()
}

fn pao_walk(start: &NdeTree, g: &WeightedGraph, c: DegreeConstraint, seed: u64) -> Result<String, String> {
    let mut t = start.clone();
    let mut applied = 0;
    for k in 0..PAO_DRAWS {
        let Some(m) = pao(&t, g, c, splitmix64(seed ^ (k << 8))) else { continue };
        let next = apply_move(&t, &m, g, c).map_err(|e| format!("draw {k}: {e}"))?;
        validate(&next, g).map_err(|v| format!("draw {k}: {v}"))?;
        if !next.satisfies(c) {
            return Err(format!("draw {k}: degree {} above cap", next.max_degree()));
        }
        let changed = edge_set(&t).symmetric_difference(&edge_set(&next)).count();
        if changed != 2 {
            return Err(format!("draw {k}: move changed {} edges", changed / 2));
        }
        if next.weight() as i64 - t.weight() as i64 != m.delta {
            return Err(format!("draw {k}: delta {} but weight moved by {}", m.delta, next.weight() as i64 - t.weight() as i64));
        }
        t = next;
        applied += 1;
    }
    Ok(format!("{applied} of {PAO_DRAWS} draws applied"))
}

/// Runs every check; the caller decides how to report them.
pub fn verify_instance(g: &WeightedGraph, c: DegreeConstraint, seed: u64, iterations: u64) -> Vec<Check> {
    let n = g.node_count();
    let mst = mst_weight_reference(g);
    let mut checks = vec![check("nde-round-trip", round_trip(g, seed))];

    let unconstrained = kruskal_constrained(g, DegreeConstraint::unconstrained(n), seed)
        .map_err(|e| e.to_string())
        .and_then(|t| {
            if t.weight() == mst {
                Ok(format!("weight {mst}"))
            } else {
                Err(format!("Kruskal tree weighs {} but the MST weighs {mst}", t.weight()))
            }
        });
    checks.push(check("mst-reference", unconstrained));

    let oracle = (n <= BRUTE_FORCE_LIMIT).then(|| dcmst_bruteforce(g, c).expect("instance within the oracle limit"));
    let init = match kruskal_constrained(g, c, seed) {
        Ok(t) => t,
        Err(e) => {
            let outcome = match oracle {
                Some(DcmstOutcome::Infeasible) => Outcome::Pass("no spanning tree meets the cap".into()),
                _ => Outcome::Fail(e.to_string()),
            };
            checks.push(Check { name: "constrained-init", outcome });
            for name in ["pao-safety", "ea-run", "brute-force"] {
                checks.push(Check { name, outcome: Outcome::Skipped("no initial tree".into()) });
            }
            return checks;
        }
    };
    let init_check = validate(&init, g).map_err(|v| v.to_string()).and_then(|()| {
        if init.satisfies(c) {
            Ok(format!("weight {}, max degree {}", init.weight(), init.max_degree()))
        } else {
            Err(format!("max degree {} above cap {}", init.max_degree(), c.dmax()))
        }
    });
    checks.push(check("constrained-init", init_check));
    checks.push(check("pao-safety", pao_walk(&init, g, c, seed)));

    let cfg = EaConfig {
        population_size: 8,
        trials_per_tree: default_trials(n),
        max_iterations: iterations,
        target_weight: oracle.and_then(DcmstOutcome::weight),
        master_seed: seed,
        record_trajectory: false,
    };
    let report = run(g, c, &cfg, &mut LocalPool::sequential());
    let ea = report.as_ref().map_err(|e| e.to_string()).and_then(|r| {
        if r.weight < mst {
            Err(format!("weight {} below the unconstrained MST {mst}", r.weight))
        } else if r.weight > init.weight() {
            Err(format!("weight {} worse than the initial tree {}", r.weight, init.weight()))
        } else {
            Ok(format!("weight {} after {} iterations", r.weight, r.iterations))
        }
    });
    checks.push(check("ea-run", ea));

    let brute = match (oracle, report) {
        (None, _) => Outcome::Skipped(format!("n = {n} exceeds {BRUTE_FORCE_LIMIT}")),
        (Some(_), Err(_)) => Outcome::Skipped("no run result".into()),
        (Some(DcmstOutcome::Infeasible), Ok(r)) => {
            Outcome::Fail(format!("oracle says infeasible but the run found weight {}", r.weight))
        }
        (Some(DcmstOutcome::Optimal(opt)), Ok(r)) if r.weight < opt => {
            Outcome::Fail(format!("run reports {} below the optimum {opt}", r.weight))
        }
        (Some(DcmstOutcome::Optimal(opt)), Ok(r)) if r.weight == opt => Outcome::Pass(format!("optimum {opt} reached")),
        (Some(DcmstOutcome::Optimal(opt)), Ok(r)) => {
            Outcome::Pass(format!("optimum {opt}, run stopped at {} (heuristic gap)", r.weight))
        }
    };
    checks.push(Check { name: "brute-force", outcome: brute });
    checks
}
