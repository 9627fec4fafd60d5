//! Improvement-only evolutionary loop over a population of spanning trees.
//!
//! Each generation picks two distinct trees, runs `T` seeded PAO trials on
//! each, and applies each tree's best strictly improving move. Trials are
//! reduced by `(delta, trial_index)`, so the trajectory does not depend on
//! how trials are spread over threads or processes.

use std::convert::Infallible;
use std::ops::Range;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{DegreeConstraint, WeightedGraph};
use crate::hash::Fnv1a64;
use crate::nde::{validate, NdeTree, Violation};
use crate::operators::{apply_move, kruskal_constrained, pao, OperatorError, PaoMove};
use crate::rng::{splitmix64, Xoshiro256};

pub const DEFAULT_POPULATION: usize = 16;
/// Largest population the seed layout can address (slot `0xFFFF` is reserved).
pub const MAX_POPULATION: usize = 0xFFFF;
/// Trial indices occupy the low 16 bits of the seed layout.
pub const MAX_TRIALS: u32 = 0x1_0000;
const SELECTION_SLOT: u32 = 0xFFFF;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("final tree failed validation: {0}")]
    InvalidTree(#[from] Violation),
    #[error("trial pool failed: {0}")]
    Pool(#[source] Box<dyn std::error::Error + Send + Sync>),
}

/// Derives every seed of a run from the master seed.
///
/// `seed(g, slot, trial) = splitmix64(master ^ (g << 32) ^ (slot << 16) ^ trial)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedSchedule {
    master_seed: u64,
}

impl SeedSchedule {
    pub fn new(master_seed: u64) -> Self {
        SeedSchedule { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trial_seed(&self, generation: u64, tree_slot: u32, trial_index: u32) -> u64 {
        splitmix64(
            self.master_seed
                ^ generation.wrapping_shl(32)
                ^ (u64::from(tree_slot) << 16)
                ^ u64::from(trial_index),
        )
    }

    /// Seed for building population member `slot` (generation 0).
    pub fn init_seed(&self, tree_slot: u32) -> u64 {
        self.trial_seed(0, tree_slot, 0)
    }

    /// Seed for the pair draw of `generation` (generations count from 1).
    pub fn selection_seed(&self, generation: u64) -> u64 {
        self.trial_seed(generation, SELECTION_SLOT, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EaConfig {
    pub population_size: usize,
    /// PAO trials per selected tree per generation (the worker count).
    pub trials_per_tree: u32,
    pub max_iterations: u64,
    /// Stop as soon as the best weight is at or below this value.
    pub target_weight: Option<u64>,
    pub master_seed: u64,
    /// Keep the population fingerprint of every generation in the report.
    pub record_trajectory: bool,
}

impl EaConfig {
    /// Defaults for an `n`-node graph: population 16, `ceil(sqrt(n))` trials.
    pub fn for_nodes(n: usize) -> Self {
        EaConfig {
            population_size: DEFAULT_POPULATION,
            trials_per_tree: default_trials(n),
            max_iterations: 10_000,
            target_weight: None,
            master_seed: 0,
            record_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(2..=MAX_POPULATION).contains(&self.population_size) {
            return Err(EngineError::InvalidConfig(format!(
                "population size {} outside 2..={MAX_POPULATION}",
                self.population_size
            )));
        }
        if !(1..=MAX_TRIALS).contains(&self.trials_per_tree) {
            return Err(EngineError::InvalidConfig(format!(
                "trials per tree {} outside 1..={MAX_TRIALS}",
                self.trials_per_tree
            )));
        }
        Ok(())
    }
}

/// `ceil(sqrt(n))`, at least 1.
pub fn default_trials(n: usize) -> u32 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n as u64 {
        r -= 1;
    }
    if r * r < n as u64 {
        r += 1;
    }
    r.max(1) as u32
}

#[derive(Clone, Debug)]
pub struct Population {
    trees: Vec<NdeTree>,
    best_index: usize,
    generation: u64,
}

impl Population {
    pub fn trees(&self) -> &[NdeTree] {
        &self.trees
    }

    pub fn best_index(&self) -> usize {
        self.best_index
    }

    pub fn best(&self) -> &NdeTree {
        &self.trees[self.best_index]
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// FNV-1a over every tree's weight and entry words, in slot order.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a64::default().word(self.generation);
        for t in &self.trees {
            h = h.word(t.weight());
            for e in t.entries() {
                h = h.word(e.to_word());
            }
        }
        h.finish()
    }

    fn refresh_best(&mut self) {
        self.best_index = self
            .trees
            .iter()
            .enumerate()
            .min_by_key(|(i, t)| (t.weight(), *i))
            .map_or(0, |(i, _)| i);
    }
}

/// Builds `P` trees with degree-capped Kruskal, one schedule seed each.
pub fn init_population(g: &WeightedGraph, c: DegreeConstraint, cfg: &EaConfig) -> Result<Population, EngineError> {
    cfg.validate()?;
    let schedule = SeedSchedule::new(cfg.master_seed);
    let trees = (0..cfg.population_size as u32)
        .map(|slot| kruskal_constrained(g, c, schedule.init_seed(slot)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pop = Population { trees, best_index: 0, generation: 0 };
    pop.refresh_best();
    Ok(pop)
}

/// One block of trials on one tree.
#[derive(Clone, Debug)]
pub struct TrialJob<'a> {
    pub graph: &'a WeightedGraph,
    pub constraint: DegreeConstraint,
    pub schedule: SeedSchedule,
    pub tree: &'a NdeTree,
    pub tree_slot: u32,
    pub generation: u64,
    pub trials: Range<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BestTrial {
    pub mv: PaoMove,
    pub trial_index: u32,
}

impl BestTrial {
    fn key(&self) -> (i64, u32) {
        (self.mv.delta, self.trial_index)
    }
}

/// Keeps the lower `(delta, trial_index)`; `None` acts as `delta = +inf`.
pub fn better_trial(a: Option<BestTrial>, b: Option<BestTrial>) -> Option<BestTrial> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.key() < x.key() { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

fn single_trial(job: &TrialJob<'_>, trial_index: u32) -> Option<BestTrial> {
    let seed = job.schedule.trial_seed(job.generation, job.tree_slot, trial_index);
    pao(job.tree, job.graph, job.constraint, seed).map(|mv| BestTrial { mv, trial_index })
}

/// Runs the job's trials in order on the calling thread.
pub fn run_trial_range(job: &TrialJob<'_>) -> Option<BestTrial> {
    job.trials.clone().fold(None, |best, i| better_trial(best, single_trial(job, i)))
}

/// Somewhere to run a block of trials: local threads or remote satellites.
pub trait TrialPool {
    type Error: std::error::Error + Send + Sync + 'static;

    fn best_trial(&mut self, job: &TrialJob<'_>) -> Result<Option<BestTrial>, Self::Error>;
}

/// In-process pool; one thread runs trials inline, more use a rayon pool.
pub struct LocalPool {
    pool: Option<rayon::ThreadPool>,
}

impl LocalPool {
    pub fn new(threads: usize) -> Self {
        let pool = (threads > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("failed to start trial threads")
        });
        LocalPool { pool }
    }

    pub fn sequential() -> Self {
        LocalPool { pool: None }
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Best trial of `job` using this pool's threads.
    pub fn run(&self, job: &TrialJob<'_>) -> Option<BestTrial> {
        match &self.pool {
            None => run_trial_range(job),
            Some(pool) => pool.install(|| {
                job.trials
                    .clone()
                    .into_par_iter()
                    .map(|i| single_trial(job, i))
                    .reduce(|| None, better_trial)
            }),
        }
    }
}

impl TrialPool for LocalPool {
    type Error = Infallible;

    fn best_trial(&mut self, job: &TrialJob<'_>) -> Result<Option<BestTrial>, Infallible> {
        Ok(self.run(job))
    }
}

/// What one generation did to its two selected trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub selected: [usize; 2],
    pub applied: [Option<i64>; 2],
}

/// Owns the population and advances it one generation at a time.
pub struct Solver<'g> {
    graph: &'g WeightedGraph,
    constraint: DegreeConstraint,
    cfg: EaConfig,
    schedule: SeedSchedule,
    population: Population,
    accepted: u64,
}

impl<'g> Solver<'g> {
    pub fn new(graph: &'g WeightedGraph, constraint: DegreeConstraint, cfg: EaConfig) -> Result<Self, EngineError> {
        let population = init_population(graph, constraint, &cfg)?;
        Ok(Solver {
            graph,
            constraint,
            schedule: SeedSchedule::new(cfg.master_seed),
            cfg,
            population,
            accepted: 0,
        })
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn config(&self) -> &EaConfig {
        &self.cfg
    }

    pub fn accepted_moves(&self) -> u64 {
        self.accepted
    }

    pub fn best_weight(&self) -> u64 {
        self.population.best().weight()
    }

    pub fn step<P: TrialPool>(&mut self, pool: &mut P) -> Result<StepOutcome, EngineError> {
        let generation = self.population.generation + 1;
        let size = self.population.trees.len();
        let mut rng = Xoshiro256::from_seed(self.schedule.selection_seed(generation));
        let first = rng.index(size);
        let mut second = rng.index(size - 1);
        if second >= first {
            second += 1;
        }
        let selected = [first, second];
        let mut applied = [None; 2];
        for (k, &slot) in selected.iter().enumerate() {
            let tree = &self.population.trees[slot];
            let job = TrialJob {
                graph: self.graph,
                constraint: self.constraint,
                schedule: self.schedule,
                tree,
                tree_slot: slot as u32,
                generation,
                trials: 0..self.cfg.trials_per_tree,
            };
            let best = pool.best_trial(&job).map_err(|e| EngineError::Pool(Box::new(e)))?;
            if let Some(best) = best.filter(|b| b.mv.delta < 0) {
                let next = apply_move(tree, &best.mv, self.graph, self.constraint)?;
                self.population.trees[slot] = next;
                self.accepted += 1;
                applied[k] = Some(best.mv.delta);
            }
        }
        self.population.refresh_best();
        self.population.generation = generation;
        Ok(StepOutcome { selected, applied })
    }

    fn target_reached(&self) -> bool {
        self.cfg.target_weight.is_some_and(|t| self.best_weight() <= t)
    }

    /// Steps until `max_iterations` or the target weight, then validates the
    /// best tree.
    pub fn run<P: TrialPool>(mut self, pool: &mut P) -> Result<SolveReport, EngineError> {
        let mut trajectory = self.cfg.record_trajectory.then(|| vec![self.population.fingerprint()]);
        let started = Instant::now();
        let mut iterations = 0;
        while iterations < self.cfg.max_iterations && !self.target_reached() {
            self.step(pool)?;
            iterations += 1;
            if let Some(t) = trajectory.as_mut() {
                t.push(self.population.fingerprint());
            }
        }
        let elapsed = started.elapsed();
        let best = self.population.best().clone();
        validate(&best, self.graph)?;
        if !best.satisfies(self.constraint) {
            return Err(EngineError::InvalidConfig(format!(
                "best tree has degree {} above cap {}",
                best.max_degree(),
                self.constraint.dmax()
            )));
        }
        Ok(SolveReport {
            weight: best.weight(),
            best,
            iterations,
            elapsed,
            accepted_moves: self.accepted,
            trajectory,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub best: NdeTree,
    pub weight: u64,
    pub iterations: u64,
    /// Wall time of the generation loop only.
    pub elapsed: Duration,
    pub accepted_moves: u64,
    /// Population fingerprint after init and after every generation.
    pub trajectory: Option<Vec<u64>>,
}

impl SolveReport {
    pub fn avg_iteration_secs(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.elapsed.as_secs_f64() / self.iterations as f64
        }
    }

    /// Applied moves per tree-trial block (two blocks per generation).
    pub fn acceptance_rate(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.accepted_moves as f64 / (2 * self.iterations) as f64
        }
    }

    /// Equal on everything except timing.
    pub fn same_outcome(&self, other: &SolveReport) -> bool {
        self.best == other.best
            && self.best.entries() == other.best.entries()
            && self.weight == other.weight
            && self.iterations == other.iterations
            && self.accepted_moves == other.accepted_moves
            && self.trajectory == other.trajectory
    }
}

/// Builds the population and runs it to completion.
pub fn run<P: TrialPool>(
    g: &WeightedGraph,
    c: DegreeConstraint,
    cfg: &EaConfig,
    pool: &mut P,
) -> Result<SolveReport, EngineError> {
    Solver::new(g, c, cfg.clone())?.run(pool)
}
