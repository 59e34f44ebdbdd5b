use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use flocksat::metrics::{cactus, ingest_run_log, speedup_report, LogSpec, SpeedupReport, DEFAULT_PAR_LIMIT, DEFAULT_SEQ_LIMIT};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Cactus,
}

/// Speedup report over an `instance,solver,status,seconds` run log.
#[derive(Debug, Parser)]
#[command(name = "flocksat-metrics", version)]
struct Args {
    log: PathBuf,

    /// Solver name of the sequential reference rows.
    #[arg(long, default_value = "sequential")]
    sequential: String,

    /// Solver name of the parallel rows.
    #[arg(long, default_value = "parallel")]
    parallel: String,

    /// Sequential time limit in seconds.
    #[arg(long, default_value_t = DEFAULT_SEQ_LIMIT)]
    t1: f64,

    /// Parallel time limit in seconds.
    #[arg(long, default_value_t = DEFAULT_PAR_LIMIT)]
    tp: f64,

    /// Total core solvers of the parallel runs (big-instance threshold is 10p seconds).
    #[arg(short = 'p', long, default_value_t = 1)]
    solvers: usize,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let spec = LogSpec {
        sequential: args.sequential.clone(),
        parallel: args.parallel.clone(),
        seq_limit: args.t1,
        par_limit: args.tp,
    };
    let file = File::open(&args.log).with_context(|| format!("cannot open {}", args.log.display()))?;
    let records = ingest_run_log(BufReader::new(file), &spec)?;
    let mut out = io::stdout().lock();
    match args.format {
        Format::Text => writeln!(out, "{}", speedup_report(&records, args.solvers, args.t1, args.tp))?,
        Format::Csv => {
            writeln!(out, "{}", SpeedupReport::CSV_HEADER)?;
            writeln!(out, "{}", speedup_report(&records, args.solvers, args.t1, args.tp).csv_row())?;
        }
        Format::Cactus => {
            writeln!(out, "solver,solved,seconds")?;
            let seq: Vec<_> = records.iter().map(|r| r.seq).collect();
            let par: Vec<_> = records.iter().map(|r| r.par).collect();
            for (name, times, limit) in [(&args.sequential, seq, args.t1), (&args.parallel, par, args.tp)] {
                for (n, t) in cactus(&times, limit) {
                    writeln!(out, "{name},{n},{t}")?;
                }
            }
        }
    }
    Ok(())
}
