//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Criteria run one after another so the timing
//! measurements do not compete with each other for cores.

use std::collections::BTreeSet;
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use ndewg_cli::report::{parse_scaling_csv, ParsedRow};
use ndewg_core::engine::default_trials;
use ndewg_core::rng::{splitmix64, Xoshiro256};
use ndewg_core::sample::random_spanning_tree;
use ndewg_core::{
    apply_move, dcmst_bruteforce, decode, encode, generate_random_graph, kruskal_constrained, mst_weight_reference,
    pao, parse_graph, run, validate, DcmstOutcome, DegreeConstraint, EaConfig, LocalPool, MoveRecord, NdeEntry,
    SolveReport, WeightedGraph,
};
use ndewg_dist::protocol::edge_record;
use ndewg_dist::{
    central_serve, memory_listener, read_frame, satellite_connect, satellite_serve, transport_pair, write_frame,
    CentralOptions, Frame, MsgType, SatelliteOptions, TcpAcceptor, TransportKind,
};

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || format!("took {:.1}s, budget {}s", elapsed.as_secs_f64(), budget.as_secs()))
}

fn tree_weight(parents: &[Option<u32>], g: &WeightedGraph) -> u64 {
    parents
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|p| u64::from(g.weight(p, v as u32).expect("tree edge in graph"))))
        .sum()
}

fn edges_of(parents: &[Option<u32>]) -> BTreeSet<(u32, u32)> {
    parents
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|p| (p.min(v as u32), p.max(v as u32))))
        .collect()
}

/// Prim's algorithm with an O(n^2) scan.
fn prim_weight(g: &WeightedGraph) -> u64 {
    let n = g.node_count();
    let mut in_tree = vec![false; n];
    let mut best = vec![u64::MAX; n];
    best[0] = 0;
    let mut total = 0;
    for _ in 0..n {
        let v = (0..n).filter(|&v| !in_tree[v]).min_by_key(|&v| best[v]).unwrap();
        in_tree[v] = true;
        total += best[v];
        for &(u, w) in g.neighbors(v as u32) {
            if !in_tree[u as usize] {
                best[u as usize] = best[u as usize].min(u64::from(w));
            }
        }
    }
    total
}

fn nde_round_trip() -> Verdict {
    let started = Instant::now();
    let mut trees = 0;
    for seed in 0..10u64 {
        let g = generate_random_graph(64, 0.2, seed).map_err(|e| e.to_string())?;
        for k in 0..100u64 {
            let parents = random_spanning_tree(&g, splitmix64((seed << 32) | k));
            let t = encode(&parents, &g).map_err(|e| e.to_string())?;
            let back = decode(t.entries()).map_err(|e| e.to_string())?;
            ensure(back == parents, || format!("graph {seed} tree {k}: decode(encode(p)) != p"))?;
            let again = encode(&back, &g).map_err(|e| e.to_string())?;
            ensure(edges_of(&decode(again.entries()).unwrap()) == edges_of(&parents), || {
                format!("graph {seed} tree {k}: edge set changed")
            })?;
            ensure(again.weight() == tree_weight(&parents, &g) && t.weight() == again.weight(), || {
                format!("graph {seed} tree {k}: weight changed")
            })?;
            trees += 1;
        }
    }
    within(started.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{trees} trees, {:.2}s", started.elapsed().as_secs_f64()))
}

fn pao_safety() -> Verdict {
    const TARGET: u64 = 10_000;
    let started = Instant::now();
    let combos: Vec<(usize, u32)> = [16, 64, 256].iter().flat_map(|&n| [2, 3, 5].map(|d| (n, d))).collect();
    let per_combo = TARGET.div_ceil(combos.len() as u64);
    let mut applied = 0u64;
    for (ci, &(n, dmax)) in combos.iter().enumerate() {
        let c = DegreeConstraint::new(dmax).unwrap();
        // Complete graphs always admit a greedy degree-2 tree.
        let density = if dmax == 2 { 1.0 } else { 0.3 };
        let mut done = 0u64;
        let mut graph_seed = 0u64;
        while done < per_combo {
            let g = generate_random_graph(n, density, 100 * ci as u64 + graph_seed).map_err(|e| e.to_string())?;
            let mut t = kruskal_constrained(&g, c, graph_seed).map_err(|e| format!("n={n} dmax={dmax}: {e}"))?;
            let mut rng = Xoshiro256::from_seed(splitmix64(ci as u64 ^ (graph_seed << 8)));
            let (mut walk, mut misses) = (0, 0);
            while walk < 250 && done < per_combo && misses < 64 {
                let Some(m) = pao(&t, &g, c, rng.next_u64()) else {
                    misses += 1;
                    continue;
                };
                misses = 0;
                let next = apply_move(&t, &m, &g, c).map_err(|e| e.to_string())?;
                validate(&next, &g).map_err(|v| format!("n={n} dmax={dmax}: {v}"))?;
                let parents = decode(next.entries()).map_err(|e| e.to_string())?;
                ensure(next.degrees().iter().all(|&d| d <= dmax), || format!("n={n} dmax={dmax}: degree cap broken"))?;
                let before = edges_of(&decode(t.entries()).unwrap());
                let after = edges_of(&parents);
                let removed: Vec<_> = before.difference(&after).copied().collect();
                let added: Vec<_> = after.difference(&before).copied().collect();
                let key = |a: u32, b: u32| (a.min(b), a.max(b));
                ensure(
                    removed == [key(m.old_parent, m.prune_node)] && added == [key(m.attach_node, m.prune_node)],
                    || format!("n={n} dmax={dmax}: move changed {removed:?} -> {added:?}"),
                )?;
                let recomputed = tree_weight(&parents, &g) as i64 - tree_weight(&decode(t.entries()).unwrap(), &g) as i64;
                ensure(recomputed == m.delta && next.weight() as i64 - t.weight() as i64 == m.delta, || {
                    format!("n={n} dmax={dmax}: delta {} but weight moved {recomputed}", m.delta)
                })?;
                t = next;
                walk += 1;
                done += 1;
            }
            graph_seed += 1;
        }
        applied += done;
    }
    within(started.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{applied} applications over n in {{16,64,256}} x dmax in {{2,3,5}}, {:.2}s", started.elapsed().as_secs_f64()))
}

fn unconstrained_correctness() -> Verdict {
    let mut rng = Xoshiro256::from_seed(0xC3);
    for i in 0..100u64 {
        let n = 2 + rng.index(255);
        let min_density = 2.0 / n as f64;
        let density = min_density + (1.0 - min_density) * rng.unit_f64() * 0.5;
        let g = generate_random_graph(n, density.min(1.0), 500 + i).map_err(|e| format!("graph {i}: {e}"))?;
        let t = kruskal_constrained(&g, DegreeConstraint::unconstrained(n), i).map_err(|e| e.to_string())?;
        let reference = mst_weight_reference(&g);
        let prim = prim_weight(&g);
        ensure(t.weight() == reference && reference == prim, || {
            format!("graph {i} (n={n}): kruskal {} reference {reference} prim {prim}", t.weight())
        })?;
    }
    Ok("100 graphs, n <= 256, weights equal to the reference and to Prim".into())
}

fn k4_golden() -> WeightedGraph {
    parse_graph("4\n0 1 1\n0 2 1\n0 3 1\n1 2 10\n1 3 10\n2 3 10\n").unwrap()
}

fn toy_corpus() -> Vec<(WeightedGraph, DegreeConstraint)> {
    const DENSITIES: [f64; 4] = [0.5, 0.7, 0.9, 1.0];
    (0..200usize)
        .map(|i| {
            let n = 4 + i % 4;
            let g = generate_random_graph(n, DENSITIES[(i / 4) % 4], 1000 + i as u64).unwrap();
            let dmax = 2 + ((i / 16) % 2) as u32;
            (g, DegreeConstraint::new(dmax).unwrap())
        })
        .collect()
}

fn constrained_optimality() -> Verdict {
    let started = Instant::now();
    let mut instances = toy_corpus();
    instances.push((k4_golden(), DegreeConstraint::new(2).unwrap()));
    let (mut pairs, mut reached, mut infeasible, mut construction_failures) = (0, 0, 0, 0);
    let mut golden = None;
    for (idx, (g, c)) in instances.iter().enumerate() {
        let optimum = match dcmst_bruteforce(g, *c).map_err(|e| e.to_string())? {
            DcmstOutcome::Optimal(w) => w,
            DcmstOutcome::Infeasible => {
                infeasible += 1;
                continue;
            }
        };
        if idx == instances.len() - 1 {
            golden = Some(optimum);
        }
        for master_seed in 0..5 {
            let cfg = EaConfig {
                population_size: 8,
                trials_per_tree: 8,
                max_iterations: 20_000,
                target_weight: Some(optimum),
                master_seed,
                record_trajectory: false,
            };
            pairs += 1;
            match run(g, *c, &cfg, &mut LocalPool::sequential()) {
                Ok(r) => {
                    ensure(r.weight >= optimum, || format!("instance {idx}: weight {} below optimum {optimum}", r.weight))?;
                    if r.weight == optimum {
                        reached += 1;
                    }
                }
                Err(_) => construction_failures += 1,
            }
        }
    }
    ensure(golden == Some(12), || format!("K4 golden optimum {golden:?}, expected 12"))?;
    let rate = reached as f64 / pairs as f64;
    let summary = format!(
        "{reached}/{pairs} pairs reached the optimum ({:.1}%), {construction_failures} construction failures, \
         {infeasible} infeasible instances skipped, K4 optimum 12, {:.0}s",
        100.0 * rate,
        started.elapsed().as_secs_f64()
    );
    within(started.elapsed(), Duration::from_secs(300)).map_err(|e| format!("{summary}; {e}"))?;
    if rate >= 0.95 {
        Ok(summary)
    } else {
        Err(format!("{summary}; need >= 95%"))
    }
}

fn determinism() -> Verdict {
    let cases = [(48usize, 0.5, 4u64, 2u32), (64, 0.5, 0, 2), (96, 0.3, 7, 3)];
    let mut total_accepted = 0;
    for &(n, density, seed, dmax) in &cases {
        let g = generate_random_graph(n, density, seed).map_err(|e| e.to_string())?;
        let c = DegreeConstraint::new(dmax).unwrap();
        let cfg = EaConfig {
            population_size: 8,
            trials_per_tree: default_trials(n),
            max_iterations: 400,
            target_weight: None,
            master_seed: 77,
            record_trajectory: true,
        };
        let reports: Vec<SolveReport> = [1, 4, 8]
            .iter()
            .map(|&w| run(&g, c, &cfg, &mut LocalPool::new(w)).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        for (r, w) in reports.iter().zip([1, 4, 8]).skip(1) {
            ensure(r.trajectory == reports[0].trajectory && r.best.entries() == reports[0].best.entries(), || {
                format!("n={n}: trajectory with {w} workers differs from 1 worker")
            })?;
        }
        total_accepted += reports[0].accepted_moves;
    }
    ensure(total_accepted > 0, || "no accepted moves; trajectories trivially equal".into())?;
    Ok(format!("3 instances x 401 generation hashes identical for 1/4/8 workers ({total_accepted} accepted moves)"))
}

fn distributed_run(g: &WeightedGraph, c: DegreeConstraint, cfg: &EaConfig, satellites: usize, kind: TransportKind) -> Result<SolveReport, String> {
    let opts = SatelliteOptions { worker_threads: 1, handshake_timeout: Duration::from_secs(10) };
    let (report, handles) = match kind {
        TransportKind::InMemory => {
            let (mut listener, connector) = memory_listener();
            let handles: Vec<_> = (0..satellites)
                .map(|_| {
                    let link = connector.connect().unwrap();
                    let opts = opts.clone();
                    thread::spawn(move || satellite_serve(Box::new(link), &opts))
                })
                .collect();
            (central_serve(g, c, cfg, &mut listener, satellites, CentralOptions::default()), handles)
        }
        TransportKind::Tcp => {
            let mut acceptor = TcpAcceptor::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
            let endpoint = acceptor.local_addr().unwrap().to_string();
            let handles: Vec<_> = (0..satellites)
                .map(|_| {
                    let (endpoint, opts) = (endpoint.clone(), opts.clone());
                    thread::spawn(move || satellite_connect(&endpoint, &opts))
                })
                .collect();
            (central_serve(g, c, cfg, &mut acceptor, satellites, CentralOptions::default()), handles)
        }
    };
    for h in handles {
        h.join().map_err(|_| "satellite panicked".to_string())?.map_err(|e| e.to_string())?;
    }
    report.map_err(|e| e.to_string())
}

fn distributed_equivalence() -> Verdict {
    let cases = [(64usize, 0.5, 0u64, 2u32, 300u64), (512, 0.02, 0, 3, 60)];
    let mut compared = 0;
    for &(n, density, seed, dmax, iterations) in &cases {
        let g = generate_random_graph(n, density, seed).map_err(|e| e.to_string())?;
        let c = DegreeConstraint::new(dmax).unwrap();
        let cfg = EaConfig {
            population_size: 8,
            trials_per_tree: default_trials(n),
            max_iterations: iterations,
            target_weight: None,
            master_seed: 9,
            record_trajectory: true,
        };
        let local = run(&g, c, &cfg, &mut LocalPool::sequential()).map_err(|e| e.to_string())?;
        ensure(local.accepted_moves > 0, || format!("n={n}: no accepted moves"))?;
        for kind in [TransportKind::InMemory, TransportKind::Tcp] {
            for satellites in [1, 2, 4, 8] {
                let d = distributed_run(&g, c, &cfg, satellites, kind)?;
                ensure(d.best.edge_set() == local.best.edge_set() && d.trajectory == local.trajectory, || {
                    format!("n={n} {kind:?} N={satellites}: differs from local")
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} distributed runs edge-set and trajectory identical to local"))
}

fn le_bytes(words: &[u64]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

fn protocol_bit_exactness() -> Verdict {
    ensure(
        NdeEntry::new(0x0102_0304, 0x0A0B_0C0D).to_word().to_le_bytes() == [0x04, 0x03, 0x02, 0x01, 0x0D, 0x0C, 0x0B, 0x0A],
        || "tree word layout".into(),
    )?;
    ensure(
        le_bytes(&edge_record(&ndewg_core::Edge::new(1, 2, 300)))
            == [0x02, 0, 0, 0, 0x01, 0, 0, 0, 0x2C, 0x01, 0, 0, 0, 0, 0, 0],
        || "edge record layout".into(),
    )?;
    let m = MoveRecord { prune_node: 5, attach_node: 7, delta: -2, seed: 0x1122_3344_5566_7788 };
    let expected_move: Vec<u8> = [
        [0x07, 0, 0, 0, 0x05, 0, 0, 0],
        [0xFE, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF],
        [0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11],
    ]
    .concat();
    ensure(le_bytes(&m.to_words()) == expected_move, || "move record layout".into())?;
    ensure(
        Frame::empty(MsgType::Shutdown).encode().unwrap() == [0, 0, 0, 0, 0xF0, 0, 0x44, 0x4E],
        || "frame header layout".into(),
    )?;

    for kind in [TransportKind::InMemory, TransportKind::Tcp] {
        let (mut a, mut b) = transport_pair(kind, "127.0.0.1:0").map_err(|e| e.to_string())?;
        let mut rng = Xoshiro256::from_seed(0x7E57 ^ kind as u64);
        let frames: Vec<Frame> = (0..10_000)
            .map(|_| {
                let t = MsgType::ALL[rng.index(MsgType::ALL.len())];
                let len = if rng.below(200) == 0 { rng.index(50_000) } else { rng.index(32) };
                Frame::new(t, (0..len).map(|_| rng.next_u64()).collect())
            })
            .collect();
        let expected: Vec<Vec<u8>> = frames.iter().map(|f| f.encode().unwrap()).collect();
        let writer = thread::spawn(move || {
            for f in &frames {
                write_frame(&mut *a, f).unwrap();
            }
            a
        });
        for (i, bytes) in expected.iter().enumerate() {
            let got = read_frame(&mut *b).map_err(|e| format!("{kind:?} frame {i}: {e}"))?;
            ensure(&got.encode().unwrap() == bytes, || format!("{kind:?} frame {i} differs"))?;
        }
        drop(writer.join().unwrap());
    }
    Ok("golden layouts match; 10000 random frames byte-identical over memory and TCP".into())
}

fn bench(args: &[&str]) -> Result<Vec<ParsedRow>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("scaling.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_ndewg"))
        .arg("bench")
        .args(args)
        .args(["--csv", csv.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("bench failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    parse_scaling_csv(&std::fs::read_to_string(csv).map_err(|e| e.to_string())?)
}

fn avg_of<'a>(rows: &'a [ParsedRow], mode: &str, satellites: usize) -> Result<&'a ParsedRow, String> {
    rows.iter()
        .find(|r| r.mode == mode && r.satellites == satellites)
        .ok_or_else(|| format!("no {mode} row with {satellites} satellites"))
}

fn scaling_shape() -> Verdict {
    let started = Instant::now();
    let big = bench(&["--sizes", "4096", "--modes", "dist:1,dist:4", "--trials", "64", "--warmup", "100", "--iters", "1000"])?;
    let one = avg_of(&big, "distributed", 1)?;
    let four = avg_of(&big, "distributed", 4)?;
    let small = bench(&["--sizes", "64", "--modes", "local,dist:1", "--warmup", "100", "--iters", "1000"])?;
    let local = avg_of(&small, "local", 0)?;
    let dist = avg_of(&small, "distributed", 1)?;
    let cores = thread::available_parallelism().map_or(1, |n| n.get());
    let summary = format!(
        "n=4096 T=64: N=1 {:.3e}s, N=4 {:.3e}s, speedup {:.3}; n=64: local {:.3e}s, dist:1 {:.3e}s; {cores} core(s), {:.0}s",
        one.avg_iter_s,
        four.avg_iter_s,
        four.speedup,
        local.avg_iter_s,
        dist.avg_iter_s,
        started.elapsed().as_secs_f64()
    );
    let mut problems = Vec::new();
    if four.avg_iter_s >= one.avg_iter_s {
        problems.push("N=4 not faster than N=1");
    }
    if four.speedup <= 1.3 {
        problems.push("speedup <= 1.3");
    }
    if dist.avg_iter_s <= local.avg_iter_s {
        problems.push("distributed not slower than local at n=64");
    }
    if started.elapsed() >= Duration::from_secs(600) {
        problems.push("over the 10 minute budget");
    }
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", problems.join(", ")))
    }
}

fn slice_measurement() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let slices = dir.path().join("slices.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_ndewg"))
        .args(["bench", "--sizes", "64", "--modes", "local", "--warmup", "0", "--iters", "1"])
        .args(["--csv", dir.path().join("s.csv").to_str().unwrap()])
        .args(["--slice-csv", slices.to_str().unwrap(), "--slice-sizes", "256,1024,4096", "--slice-prunes", "100000"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = std::fs::read_to_string(slices).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    ensure(lines.next() == Some("n,prunes,mean_slice,sqrt_n,ratio"), || "slice CSV header".into())?;
    let mut report = Vec::new();
    for (line, n) in lines.zip([256usize, 1024, 4096]) {
        let f: Vec<&str> = line.split(',').collect();
        ensure(f.len() == 5 && f[0] == n.to_string() && f[1] == "100000", || format!("bad row {line:?}"))?;
        let mean: f64 = f[2].parse().map_err(|_| format!("bad mean in {line:?}"))?;
        ensure(mean >= 1.0 && mean < n as f64, || format!("mean {mean} out of range for n={n}"))?;
        report.push(format!("n={n} mean {} (sqrt {} ratio {})", f[2], f[3], f[4]));
    }
    ensure(report.len() == 3, || "expected three rows".into())?;
    Ok(report.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("NDE round trip", nde_round_trip),
        ("PAO safety", pao_safety),
        ("unconstrained correctness", unconstrained_correctness),
        ("constrained optimality at toy scale", constrained_optimality),
        ("determinism across worker counts", determinism),
        ("distributed equivalence", distributed_equivalence),
        ("protocol bit-exactness", protocol_bit_exactness),
        ("scaling shape", scaling_shape),
        ("operator cost measurement", slice_measurement),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
