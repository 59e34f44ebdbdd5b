//! Per-process clause exchange: duplicate filtering, export admission,
//! round payload packing and distribution of incoming clauses.
//!
//! Each process owns one global filter `g` and one filter per local solver.
//! A clause offered by solver `x` is dropped when it is already in `x`'s filter
//! or in `g`, when another producer holds the export pool, or when the pool is
//! full. Incoming clauses pass `g` once and then each local filter, so a
//! solver never receives a clause twice between resets.

pub mod bloom;
pub mod buffer;

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

pub use bloom::{hash_clause, ClauseBloomFilter, DEFAULT_BLOOM_BITS, DEFAULT_BLOOM_HASHES, PRIMES};
pub use buffer::{decode, Admission, ClauseBuffer, DecodeError, ExportPool, Fill, DEFAULT_BUFFER_INTS};

use crate::par::*;
use crate::types::{Clause, Lit};

pub const DEFAULT_RESET_PERIOD: u64 = 20;
pub const DEFAULT_UNDERFILL_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeConfig {
    pub buffer_ints: usize,
    /// Filters are cleared every this many rounds; 0 disables resets.
    pub reset_period: u64,
    pub underfill_threshold: f64,
    pub bloom_bits: usize,
    pub bloom_hashes: usize,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        ExchangeConfig {
            buffer_ints: DEFAULT_BUFFER_INTS,
            reset_period: DEFAULT_RESET_PERIOD,
            underfill_threshold: DEFAULT_UNDERFILL_THRESHOLD,
            bloom_bits: DEFAULT_BLOOM_BITS,
            bloom_hashes: DEFAULT_BLOOM_HASHES,
        }
    }
}

/// Outcome of offering one clause for export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportOutcome {
    Admitted,
    LocalDuplicate,
    GlobalDuplicate,
    Contended,
    Full,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExchangeStats {
    pub offered: u64,
    pub admitted: u64,
    pub local_duplicates: u64,
    pub global_duplicates: u64,
    pub contended: u64,
    pub full: u64,
    pub overflowed: u64,
    pub received: u64,
    pub delivered: u64,
    pub malformed_rounds: u64,
    pub resets: u64,
}

#[derive(Default)]
struct Counters {
    offered: AtomicU64,
    admitted: AtomicU64,
    local_duplicates: AtomicU64,
    global_duplicates: AtomicU64,
    contended: AtomicU64,
    full: AtomicU64,
    overflowed: AtomicU64,
    received: AtomicU64,
    delivered: AtomicU64,
    malformed_rounds: AtomicU64,
    resets: AtomicU64,
}

fn bump(c: &AtomicU64) {
    c.fetch_add(1, Ordering::Relaxed);
}

/// Result of distributing one round's foreign clauses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Import {
    /// Clauses to hand to each local solver, indexed by local solver.
    pub per_solver: Vec<Vec<Clause>>,
    pub malformed: Option<DecodeError>,
}

pub struct ClauseExchange {
    config: ExchangeConfig,
    global: ClauseBloomFilter,
    local: Vec<ClauseBloomFilter>,
    pool: ExportPool,
    next_increase: AtomicUsize,
    counters: Counters,
}

impl ClauseExchange {
    pub fn new(local_solvers: usize, config: ExchangeConfig) -> Self {
        let filter = || ClauseBloomFilter::new(config.bloom_bits, config.bloom_hashes);
        ClauseExchange {
            global: filter(),
            local: (0..local_solvers).map(|_| filter()).collect(),
            pool: ExportPool::new(config.buffer_ints),
            next_increase: AtomicUsize::new(0),
            counters: Counters::default(),
            config,
        }
    }

    pub fn config(&self) -> &ExchangeConfig {
        &self.config
    }

    pub fn local_solvers(&self) -> usize {
        self.local.len()
    }

    pub fn global_filter(&self) -> &ClauseBloomFilter {
        &self.global
    }

    pub fn local_filter(&self, solver: usize) -> &ClauseBloomFilter {
        &self.local[solver]
    }

    /// Called from search threads; never blocks.
    pub fn export_from_solver(&self, solver: usize, clause: &[Lit]) -> ExportOutcome {
        bump(&self.counters.offered);
        if clause.is_empty() {
            // an empty clause is an UNSAT answer, reported through the result path
            return ExportOutcome::Full;
        }
        let outcome = if self.local[solver].insert_query(clause) {
            ExportOutcome::LocalDuplicate
        } else if self.global.insert_query(clause) {
            ExportOutcome::GlobalDuplicate
        } else {
            match self.pool.try_admit(clause) {
                Admission::Admitted => ExportOutcome::Admitted,
                Admission::Contended => ExportOutcome::Contended,
                Admission::Full => ExportOutcome::Full,
            }
        };
        bump(match outcome {
            ExportOutcome::Admitted => &self.counters.admitted,
            ExportOutcome::LocalDuplicate => &self.counters.local_duplicates,
            ExportOutcome::GlobalDuplicate => &self.counters.global_duplicates,
            ExportOutcome::Contended => &self.counters.contended,
            ExportOutcome::Full => &self.counters.full,
        });
        outcome
    }

    /// Drains the pool into this round's payload.
    pub fn fill_buffer(&self) -> Fill {
        let fill = ClauseBuffer::fill(self.pool.drain(), self.config.buffer_ints);
        self.counters
            .overflowed
            .fetch_add(fill.discarded.len() as u64, Ordering::Relaxed);
        fill
    }

    /// Local solver that should raise its clause production, if the buffer is underfilled.
    /// Successive calls rotate over the local solvers.
    pub fn underfill_target(&self, buffer: &ClauseBuffer) -> Option<usize> {
        if self.local.is_empty() || buffer.utilization() >= self.config.underfill_threshold {
            return None;
        }
        Some(self.next_increase.fetch_add(1, Ordering::Relaxed) % self.local.len())
    }

    /// Distributes the foreign part of an all-gather result of `processes`
    /// equally sized payloads. `own_rank`'s payload is skipped. A malformed
    /// payload drops every foreign clause of the round.
    pub fn import_buffers(&self, gathered: &[Lit], own_rank: usize, num_vars: Option<usize>) -> Import {
        let b = self.config.buffer_ints;
        assert!(gathered.len() % b == 0, "gathered length is not a multiple of the payload size");
        let mut incoming = Vec::new();
        for (rank, payload) in gathered.chunks(b).enumerate() {
            if rank == own_rank {
                continue;
            }
            match decode(payload, num_vars) {
                Ok(cs) => incoming.extend(cs),
                Err(e) => {
                    bump(&self.counters.malformed_rounds);
                    return Import {
                        per_solver: vec![Vec::new(); self.local.len()],
                        malformed: Some(e),
                    };
                }
            }
        }
        self.counters
            .received
            .fetch_add(incoming.len() as u64, Ordering::Relaxed);
        let fresh: Vec<Clause> = incoming
            .into_iter()
            .filter(|c| !self.global.insert_query(c.lits()))
            .collect();
        let per_solver: Vec<Vec<Clause>> = self
            .local
            .par_iter()
            .map(|filter| {
                fresh
                    .iter()
                    .filter(|c| !filter.insert_query(c.lits()))
                    .cloned()
                    .collect()
            })
            .collect();
        let delivered: usize = per_solver.iter().map(Vec::len).sum();
        self.counters
            .delivered
            .fetch_add(delivered as u64, Ordering::Relaxed);
        Import {
            per_solver,
            malformed: None,
        }
    }

    /// Clears every filter when `round` is a positive multiple of the reset period.
    pub fn periodic_reset(&self, round: u64) -> bool {
        let period = self.config.reset_period;
        if period == 0 || round == 0 || round % period != 0 {
            return false;
        }
        self.global.clear();
        for f in &self.local {
            f.clear();
        }
        bump(&self.counters.resets);
        true
    }

    pub fn stats(&self) -> ExchangeStats {
        let c = &self.counters;
        let get = |a: &AtomicU64| a.load(Ordering::Relaxed);
        ExchangeStats {
            offered: get(&c.offered),
            admitted: get(&c.admitted),
            local_duplicates: get(&c.local_duplicates),
            global_duplicates: get(&c.global_duplicates),
            contended: get(&c.contended),
            full: get(&c.full),
            overflowed: get(&c.overflowed),
            received: get(&c.received),
            delivered: get(&c.delivered),
            malformed_rounds: get(&c.malformed_rounds),
            resets: get(&c.resets),
        }
    }
}
