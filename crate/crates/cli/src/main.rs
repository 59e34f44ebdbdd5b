use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Parser;

use flocksat::dimacs::{exit_code, format_result, parse, verify_model};
use flocksat::diversify::{DiversificationMode, PhaseMode, DEFAULT_SEED};
use flocksat::exchange::{DEFAULT_BUFFER_INTS, DEFAULT_RESET_PERIOD};
use flocksat::orchestrator::{run_local, start_node, NodeOutcome, ProcessConfig};
use flocksat::transport::{TcpRendezvous, TcpTransport};
use flocksat::{Formula, Status};

/// Portfolio SAT solver with periodic clause sharing.
#[derive(Debug, Parser)]
#[command(name = "flocksat", version)]
struct Args {
    /// DIMACS CNF file; `-` or absent reads standard input.
    input: Option<PathBuf>,

    /// Core solvers per process (default: available cores).
    #[arg(short = 'c', value_name = "N")]
    solvers: Option<usize>,

    /// Virtual processes run inside this program.
    #[arg(short = 'p', value_name = "N", default_value_t = 1, conflicts_with_all = ["listen", "connect"])]
    processes: usize,

    /// Time limit in seconds.
    #[arg(short = 't', value_name = "SECONDS")]
    time_limit: Option<f64>,

    /// Sharing round interval in milliseconds.
    #[arg(short = 'i', value_name = "MS", default_value_t = 1000)]
    interval: u64,

    /// Clause buffer size in integers per process and round.
    #[arg(short = 'b', value_name = "INTS", default_value_t = DEFAULT_BUFFER_INTS)]
    buffer: usize,

    /// Phase diversification: none, random, sparse or sparserandom.
    #[arg(short = 'd', value_name = "MODE", default_value = "sparserandom")]
    diversification: PhaseMode,

    /// Skip the solvers' own diversify call.
    #[arg(long)]
    no_native_div: bool,

    /// Seed of the phase plans.
    #[arg(short = 's', value_name = "SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Bloom filter reset period in rounds (0 = never).
    #[arg(short = 'r', value_name = "ROUNDS", default_value_t = DEFAULT_RESET_PERIOD)]
    reset_period: u64,

    /// Disable clause sharing.
    #[arg(long)]
    no_share: bool,

    /// Act as rank 0 of a TCP run, accepting the other ranks on this address.
    #[arg(long, value_name = "ADDR", conflicts_with = "connect", requires = "nodes")]
    listen: Option<String>,

    /// Join a TCP run whose rank 0 listens on this address.
    #[arg(long, value_name = "ADDR", requires_all = ["rank", "nodes"])]
    connect: Option<String>,

    /// This process's rank in a TCP run.
    #[arg(long, value_name = "R")]
    rank: Option<usize>,

    /// Number of processes in a TCP run.
    #[arg(short = 'n', long = "nodes", value_name = "N")]
    nodes: Option<usize>,
}

fn read_formula(input: &Option<PathBuf>) -> Result<Formula> {
    let doc = match input {
        Some(p) if p.as_os_str() != "-" => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            parse(BufReader::new(f))
        }
        _ => parse(io::stdin().lock()),
    }
    .context("cannot parse input")?;
    let mut out = io::stdout().lock();
    for w in &doc.warnings {
        writeln!(out, "c warning: {w}")?;
    }
    if doc.tautologies > 0 {
        writeln!(out, "c dropped {} tautological clauses", doc.tautologies)?;
    }
    Ok(doc.formula)
}

fn config(args: &Args) -> Result<ProcessConfig> {
    let mut cfg = ProcessConfig {
        round_interval: Duration::from_millis(args.interval),
        buffer_ints: args.buffer,
        diversification: DiversificationMode {
            phases: args.diversification,
            native: !args.no_native_div,
        },
        seed: args.seed,
        reset_period: args.reset_period,
        sharing: !args.no_share,
        process_count: args.processes,
        ..ProcessConfig::default()
    };
    if let Some(c) = args.solvers {
        cfg.solvers_per_process = c;
    }
    if let Some(t) = args.time_limit {
        if !(t.is_finite() && t >= 0.0) {
            bail!("time limit must be a non-negative number of seconds");
        }
        cfg.time_limit = Some(Duration::from_secs_f64(t));
    }
    if args.listen.is_some() || args.connect.is_some() {
        cfg.process_count = args.nodes.unwrap_or(1);
        cfg.rank = if args.listen.is_some() { 0 } else { args.rank.unwrap_or(0) };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<(NodeOutcome, Arc<Formula>)> {
    let cfg = config(args)?;
    let formula = Arc::new(read_formula(&args.input)?);
    if let Some(addr) = &args.listen {
        let rv = TcpRendezvous::bind(addr).with_context(|| format!("cannot listen on {addr}"))?;
        let mut t = rv.accept(cfg.hello())?;
        return Ok((start_node(cfg, formula.clone(), &mut t)?, formula));
    }
    if let Some(addr) = &args.connect {
        let mut t = TcpTransport::connect(addr.as_str(), cfg.hello(), Duration::from_secs(30))?;
        return Ok((start_node(cfg, formula.clone(), &mut t)?, formula));
    }
    let mut outcomes = run_local(&cfg, formula.clone(), None, None)?;
    // in-process: report through whichever rank holds the model
    let idx = outcomes.iter().position(|o| o.model.is_some()).unwrap_or(0);
    let out = outcomes.swap_remove(idx);
    if out.status == Status::Sat && out.model.is_none() {
        bail!("SAT reported but no process holds a model");
    }
    Ok((out, formula))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (outcome, formula) = match run(&args) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("flocksat: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(m) = &outcome.model {
        if !verify_model(&formula, m) {
            eprintln!("flocksat: internal error: the reported model does not satisfy the formula");
            return ExitCode::from(1);
        }
    }
    let mut out = io::stdout().lock();
    let _ = writeln!(
        out,
        "c rounds {} finder {}",
        outcome.rounds,
        outcome.finder.map_or("-".to_string(), |r| r.to_string())
    );
    for line in format_result(outcome.status, outcome.model.as_ref()) {
        let _ = writeln!(out, "{line}");
    }
    let _ = out.flush();
    ExitCode::from(exit_code(outcome.status) as u8)
}
