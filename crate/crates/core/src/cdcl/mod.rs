//! The built-in CDCL core solver.
//!
//! [`CdclSolver`] wraps a single-threaded [`engine`] behind the thread-safe
//! [`CoreSolver`] contract. The search thread owns the engine for the whole of
//! `solve`; every other input (interrupt, phases, foreign clauses, export
//! limit) travels through atomics or queues the search polls with `try_lock`.

pub mod config;
pub(crate) mod engine;
mod heap;

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

pub use config::{config_for_rank, SearchConfig, EXPORT_LIMIT_CAP, EXPORT_LIMIT_INITIAL};
pub use engine::Stats;

use crate::solver::{CoreSolver, LearnedClauseSink, NullSink, SolverError};
use crate::types::{normalize_clause, Clause, Lit, Normalized, SatResult, Value};
use engine::{Engine, SearchContext};

pub struct CdclSolver {
    engine: Mutex<Engine>,
    pending_clauses: Mutex<Vec<Clause>>,
    pending_config: Mutex<Option<SearchConfig>>,
    phase_queue: Mutex<Vec<(usize, bool)>>,
    import_queue: Mutex<Vec<Clause>>,
    sink: Mutex<Arc<dyn LearnedClauseSink>>,
    interrupt: AtomicBool,
    export_limit: AtomicUsize,
    iterations: AtomicU64,
}

impl Default for CdclSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl CdclSolver {
    pub fn new() -> Self {
        Self::with_config(SearchConfig::default())
    }

    pub fn with_config(config: SearchConfig) -> Self {
        CdclSolver {
            engine: Mutex::new(Engine::new(config)),
            pending_clauses: Mutex::new(Vec::new()),
            pending_config: Mutex::new(None),
            phase_queue: Mutex::new(Vec::new()),
            import_queue: Mutex::new(Vec::new()),
            sink: Mutex::new(Arc::new(NullSink)),
            interrupt: AtomicBool::new(false),
            export_limit: AtomicUsize::new(EXPORT_LIMIT_INITIAL),
            iterations: AtomicU64::new(0),
        }
    }

    /// Current export length limit.
    pub fn export_limit(&self) -> usize {
        self.export_limit.load(Ordering::Relaxed)
    }

    /// Search-loop iterations so far, across all `solve` calls.
    pub fn iterations(&self) -> u64 {
        self.iterations.load(Ordering::Relaxed)
    }

    /// Blocks while a `solve` is running.
    pub fn stats(&self) -> Stats {
        self.engine().stats
    }

    /// Blocks while a `solve` is running.
    pub fn config(&self) -> SearchConfig {
        let pending = *lock(&self.pending_config);
        pending.unwrap_or_else(|| self.engine().config())
    }

    /// Records every decision literal from now on. Blocks while solving.
    pub fn trace_decisions(&self) {
        self.engine().trace = Some(Vec::new());
    }

    pub fn decision_trace(&self) -> Vec<Lit> {
        self.engine().trace.clone().unwrap_or_default()
    }

    /// Root-level value of `var` as of the end of the last `solve`.
    pub fn root_value(&self, var: usize) -> Value {
        self.engine().root_value(var)
    }

    /// Whether the database holds `clause` (in any literal order).
    pub fn contains_clause(&self, clause: &[Lit]) -> bool {
        self.engine().contains_clause(clause)
    }

    pub fn live_clauses(&self) -> usize {
        self.engine().live_clauses()
    }

    /// Structural invariant check of the trail and watch lists.
    pub fn audit(&self) -> Result<(), String> {
        self.engine().audit()
    }

    fn engine(&self) -> MutexGuard<'_, Engine> {
        lock(&self.engine)
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl CoreSolver for CdclSolver {
    fn add_clause(&self, clause: &[Lit]) -> Result<(), SolverError> {
        if let Normalized::Clause(c) = normalize_clause(clause)? {
            lock(&self.pending_clauses).push(c);
        }
        Ok(())
    }

    fn solve(&self) -> SatResult {
        if self.interrupt.load(Ordering::Acquire) {
            return SatResult::Unknown;
        }
        let mut engine = self.engine();
        if let Some(cfg) = lock(&self.pending_config).take() {
            engine.set_config(cfg);
        }
        let pending = std::mem::take(&mut *lock(&self.pending_clauses));
        engine.backtrack(0);
        for c in &pending {
            engine.ensure_vars(c.max_var());
        }
        for c in pending {
            if !engine.add_root_clause(c.lits(), false, false) {
                break;
            }
        }
        let ctx = SearchContext {
            interrupt: &self.interrupt,
            export_limit: &self.export_limit,
            iterations: &self.iterations,
            import_queue: &self.import_queue,
            phase_queue: &self.phase_queue,
            sink: lock(&self.sink).clone(),
        };
        engine.search(&ctx)
    }

    fn set_solver_interrupt(&self) {
        self.interrupt.store(true, Ordering::Release);
    }

    fn unset_solver_interrupt(&self) {
        self.interrupt.store(false, Ordering::Release);
    }

    fn set_phase(&self, var: usize, phase: bool) {
        lock(&self.phase_queue).push((var, phase));
    }

    fn diversify(&self, rank: usize, size: usize) -> Result<(), SolverError> {
        if rank >= size {
            return Err(SolverError::RankOutOfRange { rank, size });
        }
        *lock(&self.pending_config) = Some(config_for_rank(rank));
        Ok(())
    }

    fn add_learned_clause(&self, clause: &Clause) {
        lock(&self.import_queue).push(clause.clone());
    }

    fn set_learned_clause_callback(&self, sink: Arc<dyn LearnedClauseSink>) {
        *lock(&self.sink) = sink;
    }

    fn increase_clause_production(&self) {
        let _ = self
            .export_limit
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |l| {
                (l < EXPORT_LIMIT_CAP).then_some(l + 1)
            });
    }
}
