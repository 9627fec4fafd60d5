//! The scaling sweep and the subtree-slice measurement.

use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use ndewg_core::engine::default_trials;
use ndewg_core::rng::splitmix64;
use ndewg_core::sample::random_spanning_tree;
use ndewg_core::{encode, generate_random_graph, validate, DegreeConstraint, EaConfig, LocalPool, Solver, TrialPool, WeightedGraph};
use ndewg_dist::{satellite_connect, CentralOptions, SatelliteOptions, SatellitePool, TcpAcceptor};

use crate::error::{CliError, CliResult};
use crate::report::{assign_speedups, BenchRow, Mode, SliceRow};

/// Average degree targeted when no density is given.
pub const DEFAULT_AVG_DEGREE: f64 = 16.0;

/// Edge density giving roughly [`DEFAULT_AVG_DEGREE`] neighbours per node.
pub fn default_density(n: usize) -> f64 {
    (DEFAULT_AVG_DEGREE / (n.max(2) - 1) as f64).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSpec {
    Local,
    Distributed(usize),
}

impl FromStr for ModeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "local" => Ok(ModeSpec::Local),
            other => match other.strip_prefix("dist:").map(str::parse::<usize>) {
                Some(Ok(n)) if n >= 1 => Ok(ModeSpec::Distributed(n)),
                _ => Err(format!("unknown mode {other:?}; expected local or dist:N with N >= 1")),
            },
        }
    }
}

/// How distributed rows get their satellites.
#[derive(Clone, Debug)]
pub enum Launcher {
    /// Separate processes running `<program> satellite --connect ...`.
    Process(PathBuf),
    /// Threads inside this process, still talking over localhost TCP.
    Threads,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    pub modes: Vec<ModeSpec>,
    pub dmax: u32,
    pub density: Option<f64>,
    pub population: usize,
    pub trials: Option<u32>,
    pub warmup: u64,
    pub iterations: u64,
    pub master_seed: u64,
    pub graph_seed: u64,
    pub workers: usize,
    pub launcher: Launcher,
}

impl SweepSpec {
    fn config(&self, n: usize) -> EaConfig {
        EaConfig {
            population_size: self.population,
            trials_per_tree: self.trials.unwrap_or_else(|| default_trials(n)),
            max_iterations: self.warmup + self.iterations,
            target_weight: None,
            master_seed: self.master_seed,
            record_trajectory: false,
        }
    }
}

/// Runs every (size, mode) pair and returns rows with speedups filled in.
/// Progress goes to `log`, one line per finished row.
pub fn run_sweep(spec: &SweepSpec, mut log: impl FnMut(&BenchRow)) -> CliResult<Vec<BenchRow>> {
    if spec.iterations == 0 {
        return Err(CliError::Usage("bench needs at least one timed iteration".into()));
    }
    let c = DegreeConstraint::new(spec.dmax)?;
    let mut rows = Vec::new();
    for &n in &spec.sizes {
        let g = generate_random_graph(n, spec.density.unwrap_or_else(|| default_density(n)), spec.graph_seed)?;
        let cfg = spec.config(n);
        cfg.validate()?;
        for &mode in &spec.modes {
            let row = match mode {
                ModeSpec::Local => {
                    let mut pool = LocalPool::new(spec.workers);
                    let (avg, weight) = timed_steps(&g, c, &cfg, spec, &mut pool)?;
                    row(Mode::Local, 0, spec, n, avg, weight)
                }
                ModeSpec::Distributed(sats) => {
                    let (avg, weight) = distributed_row(&g, c, &cfg, spec, sats)?;
                    row(Mode::Distributed, sats, spec, n, avg, weight)
                }
            };
            log(&row);
            rows.push(row);
        }
    }
    assign_speedups(&mut rows);
    Ok(rows)
}

fn row(mode: Mode, satellites: usize, spec: &SweepSpec, n: usize, avg: f64, weight: u64) -> BenchRow {
    BenchRow {
        mode,
        satellites,
        workers: spec.workers,
        n,
        iterations: spec.iterations,
        avg_iter_s: avg,
        speedup: f64::NAN,
        final_weight: weight,
    }
}

/// Warmup generations, then timed generations; returns the mean time per
/// timed generation and the final best weight.
fn timed_steps<P: TrialPool>(
    g: &WeightedGraph,
    c: DegreeConstraint,
    cfg: &EaConfig,
    spec: &SweepSpec,
    pool: &mut P,
) -> CliResult<(f64, u64)> {
    let mut solver = Solver::new(g, c, cfg.clone())?;
    for _ in 0..spec.warmup {
        solver.step(pool).map_err(CliError::runtime)?;
    }
    let started = Instant::now();
    for _ in 0..spec.iterations {
        solver.step(pool).map_err(CliError::runtime)?;
    }
    let avg = started.elapsed().as_secs_f64() / spec.iterations as f64;
    let best = solver.population().best();
    validate(best, g)?;
    if !best.satisfies(c) {
        return Err(CliError::Runtime(format!("best tree breaks the degree cap {}", c.dmax())));
    }
    Ok((avg, best.weight()))
}

/// Satellite processes are killed if the row fails part way.
struct Fleet {
    children: Vec<Child>,
    threads: Vec<JoinHandle<Result<ndewg_dist::SatelliteSummary, ndewg_dist::DistError>>>,
}

impl Fleet {
    fn launch(launcher: &Launcher, endpoint: &str, count: usize, workers: usize) -> CliResult<Self> {
        let mut fleet = Fleet { children: Vec::new(), threads: Vec::new() };
        for _ in 0..count {
            match launcher {
                Launcher::Process(program) => {
                    let child = Command::new(program)
                        .args(["satellite", "--connect", endpoint, "--threads", &workers.to_string()])
                        .stdin(Stdio::null())
                        .stdout(Stdio::null())
                        .stderr(Stdio::null())
                        .spawn()
                        .map_err(|e| CliError::Runtime(format!("cannot start satellite {}: {e}", program.display())))?;
                    fleet.children.push(child);
                }
                Launcher::Threads => {
                    let endpoint = endpoint.to_string();
                    let opts = SatelliteOptions { worker_threads: workers, ..SatelliteOptions::default() };
                    fleet.threads.push(std::thread::spawn(move || satellite_connect(&endpoint, &opts)));
                }
            }
        }
        Ok(fleet)
    }

    fn finish(mut self) -> CliResult<()> {
        for child in &mut self.children {
            let status = child.wait()?;
            if !status.success() {
                return Err(CliError::Runtime(format!("satellite exited with {status}")));
            }
        }
        self.children.clear();
        for t in self.threads.drain(..) {
            t.join().map_err(|_| CliError::Runtime("satellite thread panicked".into()))??;
        }
        Ok(())
    }
}

impl Drop for Fleet {
    fn drop(&mut self) {
        for child in &mut self.children {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn distributed_row(g: &WeightedGraph, c: DegreeConstraint, cfg: &EaConfig, spec: &SweepSpec, satellites: usize) -> CliResult<(f64, u64)> {
    let mut acceptor = TcpAcceptor::bind("127.0.0.1:0")?;
    let endpoint = acceptor.local_addr()?.to_string();
    let fleet = Fleet::launch(&spec.launcher, &endpoint, satellites, spec.workers)?;
    let opts = CentralOptions { handshake_timeout: Duration::from_secs(30), ..CentralOptions::default() };
    let mut pool = SatellitePool::establish(&mut acceptor, satellites, g, c, cfg, opts)?;
    let outcome = timed_steps(g, c, cfg, spec, &mut pool);
    pool.shutdown();
    let measured = outcome?;
    fleet.finish()?;
    Ok(measured)
}

/// Mean subtree-slice length over `prunes` uniformly drawn non-root
/// positions, spread over random spanning trees of a random graph.
pub fn measure_slices(n: usize, density: Option<f64>, seed: u64, prunes: u64) -> CliResult<SliceRow> {
    const PRUNES_PER_TREE: u64 = 1000;
    if n < 2 {
        return Err(CliError::Usage("slice measurement needs n >= 2".into()));
    }
    let g = generate_random_graph(n, density.unwrap_or_else(|| default_density(n)), seed)?;
    let mut total = 0u64;
    let mut done = 0u64;
    let mut tree_index = 0u64;
    while done < prunes {
        let tree_seed = splitmix64(seed ^ (tree_index << 20));
        let t = encode(&random_spanning_tree(&g, tree_seed), &g).map_err(CliError::runtime)?;
        let mut rng = ndewg_core::rng::Xoshiro256::from_seed(tree_seed ^ 0x5EED);
        for _ in 0..PRUNES_PER_TREE.min(prunes - done) {
            let p = 1 + rng.index(n - 1);
            total += t.subtree_range(p).len() as u64;
            done += 1;
        }
        tree_index += 1;
    }
    Ok(SliceRow { n, prunes, mean_slice: total as f64 / prunes.max(1) as f64 })
}
