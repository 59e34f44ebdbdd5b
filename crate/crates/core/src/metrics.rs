//! Speedup evaluation over paired sequential/parallel run logs.
//!
//! A sequential timeout is charged at its limit, which favors the sequential
//! side. Speedups are only defined where the parallel run finished.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use thiserror::Error;

pub const DEFAULT_SEQ_LIMIT: f64 = 50_000.0;
pub const DEFAULT_PAR_LIMIT: f64 = 1_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Runtime {
    Solved(f64),
    /// Unsolved within the given limit.
    Timeout(f64),
}

impl Runtime {
    /// Runtime, or the limit for a timeout.
    pub fn effective(&self) -> f64 {
        match *self {
            Runtime::Solved(t) | Runtime::Timeout(t) => t,
        }
    }

    pub fn solved_within(&self, limit: f64) -> bool {
        matches!(*self, Runtime::Solved(t) if t <= limit)
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, Runtime::Solved(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub seq: Runtime,
    pub par: Runtime,
}

impl RunRecord {
    pub fn new(instance: impl Into<String>, seq: Runtime, par: Runtime) -> Self {
        RunRecord {
            instance: instance.into(),
            seq,
            par,
        }
    }
}

pub fn per_instance_speedup(r: &RunRecord) -> Option<f64> {
    match r.par {
        Runtime::Solved(p) => Some(r.seq.effective() / p),
        Runtime::Timeout(_) => None,
    }
}

/// Records whose effective sequential time is at least `10 * p`.
pub fn big_instance_filter(records: &[RunRecord], p: usize) -> Vec<RunRecord> {
    let threshold = 10.0 * p as f64;
    records
        .iter()
        .filter(|r| r.seq.effective() >= threshold)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub count: usize,
    pub average: f64,
    pub total: f64,
    pub median: f64,
}

/// Average, total and median speedup over the records with a parallel
/// runtime. `None` when there are none.
pub fn aggregate(records: &[RunRecord]) -> Option<Aggregate> {
    let solved: Vec<&RunRecord> = records.iter().filter(|r| r.par.is_solved()).collect();
    if solved.is_empty() {
        return None;
    }
    let mut speedups: Vec<f64> = solved.iter().filter_map(|r| per_instance_speedup(r)).collect();
    let n = speedups.len();
    let average = speedups.iter().sum::<f64>() / n as f64;
    let seq: f64 = solved.iter().map(|r| r.seq.effective()).sum();
    let par: f64 = solved.iter().map(|r| r.par.effective()).sum();
    speedups.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        speedups[n / 2]
    } else {
        (speedups[n / 2 - 1] + speedups[n / 2]) / 2.0
    };
    Some(Aggregate {
        count: n,
        average,
        total: seq / par,
        median,
    })
}

fn kth_smallest(mut times: Vec<f64>, k: usize) -> Option<f64> {
    if k == 0 || k > times.len() {
        return None;
    }
    times.sort_by(f64::total_cmp);
    Some(times[k - 1])
}

/// Count-based speedup: compares the limits each side needs to solve as
/// many instances as the weaker side solves within its own limit.
pub fn count_based_speedup(records: &[RunRecord], t1: f64, tp: f64) -> Option<f64> {
    let seq: Vec<f64> = records
        .iter()
        .filter(|r| r.seq.solved_within(t1))
        .map(|r| r.seq.effective())
        .collect();
    let par: Vec<f64> = records
        .iter()
        .filter(|r| r.par.solved_within(tp))
        .map(|r| r.par.effective())
        .collect();
    let (n1, np) = (seq.len(), par.len());
    if n1 < np {
        kth_smallest(par, n1).map(|tp_prime| t1 / tp_prime)
    } else {
        kth_smallest(seq, np).map(|t1_prime| t1_prime / tp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupReport {
    pub instances: usize,
    pub parallel_solved: usize,
    pub both_solved: usize,
    pub all: Option<Aggregate>,
    pub big: Option<Aggregate>,
    pub cbs: Option<f64>,
}

pub fn speedup_report(records: &[RunRecord], p: usize, t1: f64, tp: f64) -> SpeedupReport {
    SpeedupReport {
        instances: records.len(),
        parallel_solved: records.iter().filter(|r| r.par.solved_within(tp)).count(),
        both_solved: records
            .iter()
            .filter(|r| r.par.solved_within(tp) && r.seq.solved_within(t1))
            .count(),
        all: aggregate(records),
        big: aggregate(&big_instance_filter(records, p)),
        cbs: count_based_speedup(records, t1, tp),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

impl SpeedupReport {
    pub const CSV_HEADER: &'static str =
        "instances,parallel_solved,both_solved,avg,total,median,big_count,big_avg,big_total,big_median,cbs";

    pub fn csv_row(&self) -> String {
        let a = self.all;
        let b = self.big;
        [
            self.instances.to_string(),
            self.parallel_solved.to_string(),
            self.both_solved.to_string(),
            fmt_opt(a.map(|x| x.average)),
            fmt_opt(a.map(|x| x.total)),
            fmt_opt(a.map(|x| x.median)),
            b.map_or(0, |x| x.count).to_string(),
            fmt_opt(b.map(|x| x.average)),
            fmt_opt(b.map(|x| x.total)),
            fmt_opt(b.map(|x| x.median)),
            fmt_opt(self.cbs),
        ]
        .join(",")
    }
}

impl fmt::Display for SpeedupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances        {}", self.instances)?;
        writeln!(f, "parallel solved  {}", self.parallel_solved)?;
        writeln!(f, "both solved      {}", self.both_solved)?;
        for (name, agg) in [("all", self.all), ("big", self.big)] {
            writeln!(
                f,
                "speedup {name:<8} avg {}  total {}  median {}",
                fmt_opt(agg.map(|a| a.average)),
                fmt_opt(agg.map(|a| a.total)),
                fmt_opt(agg.map(|a| a.median)),
            )?;
        }
        write!(f, "count-based      {}", fmt_opt(self.cbs))
    }
}

/// Cactus points `(instances solved, time limit)`: the k-th point is the
/// k-th smallest runtime solved within `limit`.
pub fn cactus(times: &[Runtime], limit: f64) -> Vec<(usize, f64)> {
    let mut solved: Vec<f64> = times
        .iter()
        .filter(|t| t.solved_within(limit))
        .map(Runtime::effective)
        .collect();
    solved.sort_by(f64::total_cmp);
    solved.into_iter().enumerate().map(|(i, t)| (i + 1, t)).collect()
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Which solver names in a run log are the sequential and parallel side.
#[derive(Debug, Clone)]
pub struct LogSpec {
    pub sequential: String,
    pub parallel: String,
    pub seq_limit: f64,
    pub par_limit: f64,
}

impl Default for LogSpec {
    fn default() -> Self {
        LogSpec {
            sequential: "sequential".into(),
            parallel: "parallel".into(),
            seq_limit: DEFAULT_SEQ_LIMIT,
            par_limit: DEFAULT_PAR_LIMIT,
        }
    }
}

fn solved_status(s: &str) -> Option<bool> {
    match s.trim().to_ascii_uppercase().as_str() {
        "SAT" | "UNSAT" | "SATISFIABLE" | "UNSATISFIABLE" | "SOLVED" => Some(true),
        "UNKNOWN" | "TIMEOUT" | "MEMOUT" | "ERROR" | "UNSOLVED" => Some(false),
        _ => None,
    }
}

/// Reads `instance,solver,status,seconds` rows (an optional header row is
/// skipped) and pairs them by instance. A missing side is a timeout at its limit.
pub fn ingest_run_log<R: Read>(reader: R, spec: &LogSpec) -> Result<Vec<RunRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut seen: BTreeMap<String, (Option<Runtime>, Option<Runtime>)> = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 1, |p| p.line());
        let bad = |message: String| IngestError::Malformed { line, message };
        if row.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", row.len())));
        }
        if i == 0 && row[0].eq_ignore_ascii_case("instance") {
            continue;
        }
        let (instance, solver, status, seconds) = (&row[0], &row[1], &row[2], &row[3]);
        let is_seq = if solver == spec.sequential {
            true
        } else if solver == spec.parallel {
            false
        } else {
            return Err(bad(format!("unknown solver `{solver}`")));
        };
        let solved = solved_status(status).ok_or_else(|| bad(format!("unknown status `{status}`")))?;
        let secs: f64 = seconds
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite() && *s > 0.0)
            .ok_or_else(|| bad(format!("`{seconds}` is not a positive number of seconds")))?;
        let limit = if is_seq { spec.seq_limit } else { spec.par_limit };
        let rt = if solved && secs <= limit {
            Runtime::Solved(secs)
        } else {
            Runtime::Timeout(limit)
        };
        let entry = seen.entry(instance.to_string()).or_default();
        let slot = if is_seq { &mut entry.0 } else { &mut entry.1 };
        if slot.replace(rt).is_some() {
            return Err(bad(format!("duplicate row for `{instance}` / `{solver}`")));
        }
    }
    Ok(seen
        .into_iter()
        .map(|(instance, (s, p))| RunRecord {
            instance,
            seq: s.unwrap_or(Runtime::Timeout(spec.seq_limit)),
            par: p.unwrap_or(Runtime::Timeout(spec.par_limit)),
        })
        .collect())
}
