//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use ndewg_core::engine::default_trials;
use ndewg_core::{generate_random_graph, load_graph, run, DegreeConstraint, EaConfig, LocalPool, SolveReport, WeightedGraph};
use ndewg_dist::{central_serve, resolve_listen_endpoint, satellite_connect, CentralOptions, Listener, SatelliteOptions, TcpAcceptor};

use crate::bench::{measure_slices, run_sweep, Launcher, ModeSpec, SweepSpec};
use crate::error::{CliError, CliResult};
use crate::report::{assign_speedups, emit_scaling_csv, emit_slice_csv, BenchRow, Mode};
use crate::verify::verify_instance;

#[derive(Debug, Parser)]
#[command(name = "ndewg", version, about = "Degree-constrained minimum spanning trees by evolutionary search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random connected graph in edge-list format.
    Gen(GenArgs),
    /// Solve an instance in this process.
    Solve(SolveArgs),
    /// Coordinate a distributed solve over TCP satellites.
    Central(CentralArgs),
    /// Serve trial work for a central.
    Satellite(SatelliteArgs),
    /// Time the local and distributed modes over a size sweep.
    Bench(BenchArgs),
    /// Check invariants and oracles on one instance.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub dmax: u32,
    #[arg(long, default_value_t = ndewg_core::engine::DEFAULT_POPULATION)]
    pub pop: usize,
    /// Trials per selected tree; defaults to ceil(sqrt(n)).
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long, default_value_t = 10_000)]
    pub iters: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop once the best weight is at or below this.
    #[arg(long)]
    pub target: Option<u64>,
}

impl SearchArgs {
    fn load(&self) -> CliResult<(WeightedGraph, DegreeConstraint, EaConfig)> {
        let g = read_graph(&self.graph)?;
        let c = DegreeConstraint::new(self.dmax)?;
        let cfg = EaConfig {
            population_size: self.pop,
            trials_per_tree: self.trials.unwrap_or_else(|| default_trials(g.node_count())),
            max_iterations: self.iters,
            target_weight: self.target,
            master_seed: self.seed,
            record_trajectory: false,
        };
        cfg.validate()?;
        Ok((g, c, cfg))
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Also write the result as a one-row scaling CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CentralArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Listen address; NDE_BIND overrides it.
    #[arg(long, default_value = "127.0.0.1:7070")]
    pub listen: String,
    #[arg(long, default_value_t = 1)]
    pub satellites: usize,
    #[arg(long, default_value_t = 10)]
    pub timeout_secs: u64,
}

#[derive(Debug, Args)]
pub struct SatelliteArgs {
    #[arg(long)]
    pub connect: String,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 10)]
    pub timeout_secs: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024,2048,4096")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "local,dist:1,dist:4,dist:8")]
    pub modes: Vec<ModeSpec>,
    /// Scaling CSV destination; printed to stdout when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub dmax: u32,
    /// Edge density; defaults to about 16 neighbours per node.
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long, default_value_t = ndewg_core::engine::DEFAULT_POPULATION)]
    pub pop: usize,
    /// Trials per selected tree; defaults to ceil(sqrt(n)).
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long, default_value_t = 100)]
    pub warmup: u64,
    #[arg(long, default_value_t = 1000)]
    pub iters: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub graph_seed: u64,
    /// Threads per satellite, and for the local pool.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Run satellites as threads of this process instead of child processes.
    #[arg(long)]
    pub in_process: bool,
    /// Also measure mean subtree-slice sizes and write them here.
    #[arg(long)]
    pub slice_csv: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
    pub slice_sizes: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub slice_prunes: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub dmax: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5_000)]
    pub iters: u64,
}

/// Process entry point: [`run_with_io`] on the real stdout and stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_io(args, &mut std::io::stdout().lock(), &mut std::io::stderr())
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code. Results go to `out`; progress and errors go to `err`.
pub fn run_with_io<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "ndewg: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Gen(a) => gen(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Central(a) => central(a, out, err),
        Command::Satellite(a) => satellite(a, err),
        Command::Bench(a) => bench(a, out, err),
        Command::Verify(a) => verify(a, out),
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let g = generate_random_graph(a.nodes, a.density, a.seed)?;
    g.write_edge_list(&a.out)?;
    writeln!(out, "wrote {} nodes, {} edges to {}", g.node_count(), g.edge_count(), a.out.display())?;
    Ok(())
}

fn print_report(r: &SolveReport, out: &mut dyn Write) -> CliResult<()> {
    writeln!(out, "weight {}", r.weight)?;
    writeln!(out, "iterations {}", r.iterations)?;
    writeln!(out, "avg_iter_s {}", crate::report::format_sig(r.avg_iteration_secs(), 6))?;
    writeln!(out, "accepted_moves {}", r.accepted_moves)?;
    writeln!(out, "max_degree {}", r.best.max_degree())?;
    Ok(())
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let (g, c, cfg) = a.search.load()?;
    let mut pool = LocalPool::new(a.threads);
    let report = run(&g, c, &cfg, &mut pool)?;
    print_report(&report, out)?;
    if let Some(path) = a.csv {
        let mut rows = vec![BenchRow {
            mode: Mode::Local,
            satellites: 0,
            workers: pool.threads(),
            n: g.node_count(),
            iterations: report.iterations,
            avg_iter_s: report.avg_iteration_secs(),
            speedup: f64::NAN,
            final_weight: report.weight,
        }];
        assign_speedups(&mut rows);
        std::fs::write(path, emit_scaling_csv(&rows))?;
    }
    Ok(())
}

fn central(a: CentralArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let (g, c, cfg) = a.search.load()?;
    if a.satellites == 0 {
        return Err(CliError::Usage("--satellites must be at least 1".into()));
    }
    let endpoint = resolve_listen_endpoint(&a.listen);
    let mut acceptor = TcpAcceptor::bind(&endpoint)?;
    writeln!(err, "listening on {}", acceptor.endpoint())?;
    let opts = CentralOptions { handshake_timeout: Duration::from_secs(a.timeout_secs), ..CentralOptions::default() };
    let report = central_serve(&g, c, &cfg, &mut acceptor, a.satellites, opts)?;
    print_report(&report, out)
}

fn satellite(a: SatelliteArgs, err: &mut dyn Write) -> CliResult<()> {
    let opts = SatelliteOptions { worker_threads: a.threads.max(1), handshake_timeout: Duration::from_secs(a.timeout_secs) };
    let summary = satellite_connect(&a.connect, &opts)?;
    writeln!(err, "satellite {} served {} work orders", summary.satellite_id, summary.work_orders)?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let launcher = if a.in_process {
        Launcher::Threads
    } else {
        Launcher::Process(std::env::current_exe()?)
    };
    let spec = SweepSpec {
        sizes: a.sizes,
        modes: a.modes,
        dmax: a.dmax,
        density: a.density,
        population: a.pop,
        trials: a.trials,
        warmup: a.warmup,
        iterations: a.iters,
        master_seed: a.seed,
        graph_seed: a.graph_seed,
        workers: a.workers.max(1),
        launcher,
    };
    let rows = run_sweep(&spec, |r| {
        let label = match r.mode {
            Mode::Local => "local".to_string(),
            Mode::Distributed => format!("dist:{}", r.satellites),
        };
        let _ = writeln!(err, "n={:<5} {label:<7} avg_iter_s={:.3e}", r.n, r.avg_iter_s);
    })?;
    let csv = emit_scaling_csv(&rows);
    match &a.csv {
        Some(path) => std::fs::write(path, &csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    if let Some(path) = &a.slice_csv {
        let slices = a
            .slice_sizes
            .iter()
            .map(|&n| measure_slices(n, a.density, a.graph_seed, a.slice_prunes))
            .collect::<CliResult<Vec<_>>>()?;
        std::fs::write(path, emit_slice_csv(&slices))?;
    }
    Ok(())
}

fn read_graph(path: &std::path::Path) -> CliResult<WeightedGraph> {
    load_graph(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let g = read_graph(&a.graph)?;
    let c = DegreeConstraint::new(a.dmax)?;
    let checks = verify_instance(&g, c, a.seed, a.iters);
    for ch in &checks {
        writeln!(out, "{}", ch.line())?;
    }
    let failed: Vec<&str> = checks.iter().filter(|c| c.failed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
