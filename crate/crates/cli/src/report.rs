//! Bench rows and their CSV rendering.

use std::fmt;

pub const SCALING_HEADER: &str = "mode,satellites,workers,n,iterations,avg_iter_s,speedup,final_weight";
pub const SLICE_HEADER: &str = "n,prunes,mean_slice,sqrt_n,ratio";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Local,
    Distributed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Local => "local",
            Mode::Distributed => "distributed",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub mode: Mode,
    /// 0 for local rows.
    pub satellites: usize,
    /// Threads per satellite, or local pool threads.
    pub workers: usize,
    pub n: usize,
    pub iterations: u64,
    pub avg_iter_s: f64,
    pub speedup: f64,
    pub final_weight: u64,
}

impl BenchRow {
    fn sort_key(&self) -> (Mode, usize, usize, usize) {
        (self.mode, self.satellites, self.n, self.workers)
    }

    fn is_single_satellite(&self) -> bool {
        self.mode == Mode::Distributed && self.satellites == 1
    }
}

/// Fills in `speedup` for every row: the baseline for each graph size is
/// its one-satellite row, or the local row when the sweep has none.
pub fn assign_speedups(rows: &mut [BenchRow]) {
    let baselines: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| r.n)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .filter_map(|n| {
            let same_n = || rows.iter().filter(move |r| r.n == n);
            same_n()
                .find(|r| r.is_single_satellite())
                .or_else(|| same_n().find(|r| r.mode == Mode::Local))
                .map(|r| (n, r.avg_iter_s))
        })
        .collect();
    for row in rows.iter_mut() {
        row.speedup = match baselines.iter().find(|(n, _)| *n == row.n) {
            Some(&(_, base)) if base == row.avg_iter_s => 1.0,
            Some(&(_, base)) => base / row.avg_iter_s,
            None => f64::NAN,
        };
    }
}

/// `printf("%.*g")`: `digits` significant digits, trailing zeros dropped,
/// scientific notation for very small or large magnitudes.
pub fn format_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g6(x: f64) -> String {
    format_sig(x, 6)
}

/// The scaling CSV: fixed header, rows ordered by (mode, satellites, n).
pub fn emit_scaling_csv(rows: &[BenchRow]) -> String {
    let mut sorted: Vec<&BenchRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    let mut out = format!("{SCALING_HEADER}\n");
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.mode,
            r.satellites,
            r.workers,
            r.n,
            r.iterations,
            g6(r.avg_iter_s),
            g6(r.speedup),
            r.final_weight
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceRow {
    pub n: usize,
    pub prunes: u64,
    pub mean_slice: f64,
}

pub fn emit_slice_csv(rows: &[SliceRow]) -> String {
    let mut out = format!("{SLICE_HEADER}\n");
    for r in rows {
        let root = (r.n as f64).sqrt();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.prunes,
            g6(r.mean_slice),
            g6(root),
            g6(r.mean_slice / root)
        ));
    }
    out
}

/// One parsed scaling CSV row, for reading bench output back.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRow {
    pub mode: String,
    pub satellites: usize,
    pub workers: usize,
    pub n: usize,
    pub iterations: u64,
    pub avg_iter_s: f64,
    pub speedup: f64,
    pub final_weight: u64,
}

pub fn parse_scaling_csv(text: &str) -> Result<Vec<ParsedRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(SCALING_HEADER) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(format!("row {}: expected 8 fields, got {}", i + 1, f.len()));
            }
            let bad = |what: &str| format!("row {}: bad {what}", i + 1);
            Ok(ParsedRow {
                mode: f[0].to_string(),
                satellites: f[1].parse().map_err(|_| bad("satellites"))?,
                workers: f[2].parse().map_err(|_| bad("workers"))?,
                n: f[3].parse().map_err(|_| bad("n"))?,
                iterations: f[4].parse().map_err(|_| bad("iterations"))?,
                avg_iter_s: f[5].parse().map_err(|_| bad("avg_iter_s"))?,
                speedup: f[6].parse().map_err(|_| bad("speedup"))?,
                final_weight: f[7].parse().map_err(|_| bad("final_weight"))?,
            })
        })
        .collect()
}
