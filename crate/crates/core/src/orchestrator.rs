//! The per-process engine: solver threads, diversification and the periodic
//! sharing/termination rounds.
//!
//! Each process runs one control thread (the caller of [`Node::run`]) and one
//! search thread per local solver. Search threads hand results to a
//! [`ResultSlot`] and exported clauses to the [`ClauseExchange`], neither of
//! which blocks them. Every round the control thread contributes a
//! [`RoundMessage`] to the all-gather; any reported result ends the run on
//! all processes in the same round.

use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cdcl::CdclSolver;
use crate::diversify::{apply_diversification, DiversificationMode, DEFAULT_SEED};
use crate::exchange::{
    ClauseBuffer, ClauseExchange, ExchangeConfig, ExchangeStats, DEFAULT_BUFFER_INTS, DEFAULT_RESET_PERIOD,
};
use crate::solver::{load_formula, CoreSolver, LearnedClauseSink, SolverError};
use crate::transport::{Hello, LocalCluster, Transport, TransportError};
use crate::types::{Assignment, Clause, Formula, Lit, SatResult, Status};

pub const DEFAULT_ROUND_INTERVAL: Duration = Duration::from_millis(1000);
pub const MIN_BUFFER_INTS: usize = 16;
const HEADER_INTS: usize = 2;

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("inconsistent results: rank {sat} reported SAT while rank {unsat} reported UNSAT")]
    Inconsistent { sat: usize, unsat: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("search thread {0} panicked")]
    SearchPanic(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessConfig {
    pub rank: usize,
    pub process_count: usize,
    pub solvers_per_process: usize,
    pub round_interval: Duration,
    pub buffer_ints: usize,
    pub diversification: DiversificationMode,
    pub seed: u64,
    /// Filter reset period in rounds; 0 never resets.
    pub reset_period: u64,
    pub time_limit: Option<Duration>,
    pub sharing: bool,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        ProcessConfig {
            rank: 0,
            process_count: 1,
            solvers_per_process: thread::available_parallelism().map_or(1, |n| n.get()),
            round_interval: DEFAULT_ROUND_INTERVAL,
            buffer_ints: DEFAULT_BUFFER_INTS,
            diversification: DiversificationMode::default(),
            seed: DEFAULT_SEED,
            reset_period: DEFAULT_RESET_PERIOD,
            time_limit: None,
            sharing: true,
        }
    }
}

impl ProcessConfig {
    pub fn validate(&self) -> Result<(), NodeError> {
        if self.process_count == 0 || self.rank >= self.process_count {
            return Err(NodeError::Config(format!(
                "rank {} is not below process count {}",
                self.rank, self.process_count
            )));
        }
        if self.solvers_per_process == 0 {
            return Err(NodeError::Config("at least one solver per process".into()));
        }
        if self.buffer_ints < MIN_BUFFER_INTS {
            return Err(NodeError::Config(format!(
                "buffer of {} integers is below the minimum of {MIN_BUFFER_INTS}",
                self.buffer_ints
            )));
        }
        if self.round_interval < Duration::from_millis(1) {
            return Err(NodeError::Config("round interval must be at least 1 ms".into()));
        }
        if self.buffer_ints + HEADER_INTS > i32::MAX as usize {
            return Err(NodeError::Config("buffer too large".into()));
        }
        Ok(())
    }

    pub fn total_solvers(&self) -> usize {
        self.process_count * self.solvers_per_process
    }

    /// FNV-1a over every setting that must agree across processes.
    pub fn checksum(&self) -> u32 {
        let limit_ms = self.time_limit.map_or(u64::MAX, |t| t.as_millis() as u64);
        let words = [
            self.process_count as u64,
            self.solvers_per_process as u64,
            self.round_interval.as_micros() as u64,
            self.buffer_ints as u64,
            self.diversification.phases as u64,
            self.diversification.native as u64,
            self.seed,
            self.reset_period,
            limit_ms,
            self.sharing as u64,
        ];
        let mut h: u32 = 0x811c_9dc5;
        for w in words {
            for b in w.to_le_bytes() {
                h ^= b as u32;
                h = h.wrapping_mul(0x0100_0193);
            }
        }
        h
    }

    pub fn hello(&self) -> Hello {
        Hello {
            rank: self.rank,
            process_count: self.process_count,
            buffer_ints: self.buffer_ints,
            checksum: self.checksum(),
        }
    }

    pub fn exchange_config(&self) -> ExchangeConfig {
        ExchangeConfig {
            buffer_ints: self.buffer_ints,
            reset_period: self.reset_period,
            ..ExchangeConfig::default()
        }
    }
}

/// Header flag of a round message. `Timeout` reports an expired time limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundStatus {
    Running = 0,
    Sat = 1,
    Unsat = 2,
    Timeout = 3,
}

impl RoundStatus {
    fn from_flag(x: i32) -> Option<Self> {
        Some(match x {
            0 => RoundStatus::Running,
            1 => RoundStatus::Sat,
            2 => RoundStatus::Unsat,
            3 => RoundStatus::Timeout,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundMessage {
    pub status: RoundStatus,
    /// Rank of the reporting process; set exactly when `status` is not `Running`.
    pub finder: Option<usize>,
    pub payload: Vec<Lit>,
}

impl RoundMessage {
    pub fn encode(&self) -> Vec<i32> {
        let mut out = Vec::with_capacity(HEADER_INTS + self.payload.len());
        out.push(self.status as i32);
        out.push(self.finder.map_or(-1, |r| r as i32));
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(words: &[i32], buffer_ints: usize) -> Result<Self, NodeError> {
        if words.len() != buffer_ints + HEADER_INTS {
            return Err(NodeError::Protocol(format!(
                "round message of {} integers, expected {}",
                words.len(),
                buffer_ints + HEADER_INTS
            )));
        }
        let status = RoundStatus::from_flag(words[0])
            .ok_or_else(|| NodeError::Protocol(format!("unknown status flag {}", words[0])))?;
        let finder = match words[1] {
            -1 => None,
            r if r >= 0 => Some(r as usize),
            r => return Err(NodeError::Protocol(format!("bad finder rank {r}"))),
        };
        if (status == RoundStatus::Running) != finder.is_none() {
            return Err(NodeError::Protocol("finder rank does not match status".into()));
        }
        Ok(RoundMessage {
            status,
            finder,
            payload: words[HEADER_INTS..].to_vec(),
        })
    }
}

/// Global verdict of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Continue,
    Done { status: Status, finder: Option<usize> },
}

/// Applies the termination rule: the lowest reporting rank wins; SAT next
/// to UNSAT is fatal; a timeout ends the run as UNKNOWN unless a result
/// arrived in the same round.
pub fn decide(messages: &[RoundMessage]) -> Result<Verdict, NodeError> {
    let sat = messages.iter().filter(|m| m.status == RoundStatus::Sat).filter_map(|m| m.finder).min();
    let unsat = messages.iter().filter(|m| m.status == RoundStatus::Unsat).filter_map(|m| m.finder).min();
    match (sat, unsat) {
        (Some(s), Some(u)) => Err(NodeError::Inconsistent { sat: s, unsat: u }),
        (Some(s), None) => Ok(Verdict::Done {
            status: Status::Sat,
            finder: Some(s),
        }),
        (None, Some(u)) => Ok(Verdict::Done {
            status: Status::Unsat,
            finder: Some(u),
        }),
        (None, None) if messages.iter().any(|m| m.status == RoundStatus::Timeout) => Ok(Verdict::Done {
            status: Status::Unknown,
            finder: None,
        }),
        (None, None) => Ok(Verdict::Continue),
    }
}

struct Found {
    result: SatResult,
    solver: usize,
    at: Instant,
}

/// First-writer-wins record of a local answer.
///
/// A successful [`offer`](ResultSlot::offer) interrupts every registered
/// solver and wakes the control thread.
pub struct ResultSlot {
    found: Mutex<Option<Found>>,
    cv: Condvar,
    solvers: Vec<Arc<dyn CoreSolver>>,
}

impl ResultSlot {
    pub fn new(solvers: Vec<Arc<dyn CoreSolver>>) -> Self {
        ResultSlot {
            found: Mutex::new(None),
            cv: Condvar::new(),
            solvers,
        }
    }

    /// Returns whether this call recorded the answer. UNKNOWN is ignored.
    pub fn offer(&self, result: SatResult, solver: usize) -> bool {
        if result.status() == Status::Unknown {
            return false;
        }
        {
            let mut found = self.found.lock().unwrap_or_else(|p| p.into_inner());
            if found.is_some() {
                return false;
            }
            *found = Some(Found {
                result,
                solver,
                at: Instant::now(),
            });
        }
        for s in &self.solvers {
            s.set_solver_interrupt();
        }
        self.cv.notify_all();
        true
    }

    fn status(&self) -> Option<Status> {
        self.lock().as_ref().map(|f| f.result.status())
    }

    /// Sleeps up to `timeout`, returning early once an answer is recorded.
    fn wait(&self, timeout: Duration) {
        let deadline = Instant::now() + timeout;
        let mut found = self.lock();
        while found.is_none() {
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            found = self
                .cv
                .wait_timeout(found, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
    }

    /// Status and index of the recording solver.
    pub fn recorded(&self) -> Option<(Status, usize)> {
        self.lock().as_ref().map(|f| (f.result.status(), f.solver))
    }

    fn take(&self) -> Option<Found> {
        self.lock().take()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Option<Found>> {
        self.found.lock().unwrap_or_else(|p| p.into_inner())
    }
}

struct ExportSink {
    exchange: Arc<ClauseExchange>,
    solver: usize,
}

impl LearnedClauseSink for ExportSink {
    fn write(&self, clause: &[Lit]) {
        self.exchange.export_from_solver(self.solver, clause);
    }
}

pub type SolverFactory = Arc<dyn Fn(usize) -> Arc<dyn CoreSolver> + Send + Sync>;

/// Called with `(local solver index, clause)` for every delivered import.
pub type ImportObserver = Arc<dyn Fn(usize, &Clause) + Send + Sync>;

pub fn default_factory() -> SolverFactory {
    Arc::new(|_| Arc::new(CdclSolver::new()) as Arc<dyn CoreSolver>)
}

#[derive(Debug, Clone)]
pub struct NodeOutcome {
    pub rank: usize,
    pub status: Status,
    /// Process whose report decided the run.
    pub finder: Option<usize>,
    /// Present only on the finding process of a SAT run, sized to the formula.
    pub model: Option<Assignment>,
    /// Local solver that produced this process's answer, if any.
    pub local_solver: Option<usize>,
    pub rounds: u64,
    pub started: Instant,
    pub first_local_find: Option<Instant>,
    pub finished: Instant,
    /// What each search thread's `solve` returned.
    pub solver_statuses: Vec<Status>,
    pub exchange: ExchangeStats,
}

impl NodeOutcome {
    /// The answer as a [`SatResult`]. Non-finding processes of a SAT run hold
    /// no model and yield `None`.
    pub fn result(&self) -> Option<SatResult> {
        match self.status {
            Status::Sat => self.model.clone().map(SatResult::Sat),
            Status::Unsat => Some(SatResult::Unsat),
            Status::Unknown => Some(SatResult::Unknown),
        }
    }
}

pub struct Node {
    config: ProcessConfig,
    formula: Arc<Formula>,
    factory: SolverFactory,
    observer: Option<ImportObserver>,
}

impl Node {
    pub fn new(config: ProcessConfig, formula: Arc<Formula>) -> Self {
        Node {
            config,
            formula,
            factory: default_factory(),
            observer: None,
        }
    }

    /// `factory(global_index)` builds each local solver.
    pub fn with_solver_factory(mut self, factory: SolverFactory) -> Self {
        self.factory = factory;
        self
    }

    pub fn with_import_observer(mut self, observer: ImportObserver) -> Self {
        self.observer = Some(observer);
        self
    }

    pub fn run<T: Transport + ?Sized>(self, transport: &mut T) -> Result<NodeOutcome, NodeError> {
        let cfg = &self.config;
        cfg.validate()?;
        if transport.rank() != cfg.rank || transport.size() != cfg.process_count {
            return Err(NodeError::Config(format!(
                "transport is rank {} of {}, configuration says {} of {}",
                transport.rank(),
                transport.size(),
                cfg.rank,
                cfg.process_count
            )));
        }
        let started = Instant::now();
        let hello = cfg.hello();
        let all = transport.all_gather(&hello.encode())?;
        for (r, chunk) in all.chunks(5).enumerate() {
            let theirs = Hello::decode(chunk)?;
            if theirs.rank != r {
                return Err(NodeError::Protocol(format!("rank {r} introduced itself as {}", theirs.rank)));
            }
            hello.compatible(&theirs)?;
        }

        let local = cfg.solvers_per_process;
        let num_vars = self.formula.num_vars();
        let solvers: Vec<Arc<dyn CoreSolver>> = (0..local)
            .map(|i| (self.factory)(cfg.rank * local + i))
            .collect();
        for s in &solvers {
            load_formula(s.as_ref(), &self.formula);
        }
        apply_diversification(
            &solvers,
            cfg.diversification,
            cfg.rank,
            cfg.total_solvers(),
            num_vars,
            cfg.seed,
        )?;
        let exchange = Arc::new(ClauseExchange::new(local, cfg.exchange_config()));
        if cfg.sharing {
            for (i, s) in solvers.iter().enumerate() {
                s.set_learned_clause_callback(Arc::new(ExportSink {
                    exchange: exchange.clone(),
                    solver: i,
                }));
            }
        }

        let slot = Arc::new(ResultSlot::new(solvers.clone()));
        let handles: Vec<_> = solvers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (s, slot) = (s.clone(), slot.clone());
                thread::Builder::new()
                    .name(format!("search-{}-{i}", cfg.rank))
                    .spawn(move || {
                        let r = s.solve();
                        let status = r.status();
                        slot.offer(r, i);
                        status
                    })
                    .expect("spawn search thread")
            })
            .collect();
        let stop = |handles: Vec<thread::JoinHandle<Status>>| -> Result<Vec<Status>, NodeError> {
            for s in &solvers {
                s.set_solver_interrupt();
            }
            handles
                .into_iter()
                .enumerate()
                .map(|(i, h)| h.join().map_err(|_| NodeError::SearchPanic(i)))
                .collect()
        };

        let looped = self.round_loop(transport, &solvers, &slot, &exchange, started);
        let statuses = stop(handles)?;
        let (verdict, rounds) = looped?;
        let Verdict::Done { status, finder } = verdict else {
            unreachable!("round loop only returns terminal verdicts")
        };

        let found = slot.take();
        let first_local_find = found.as_ref().map(|f| f.at);
        let local_solver = found.as_ref().map(|f| f.solver);
        let model = match (status, finder, found) {
            (Status::Sat, Some(r), Some(f)) if r == cfg.rank => f.result.model().cloned().map(|m| m.resized(num_vars)),
            _ => None,
        };
        if status == Status::Sat && finder == Some(cfg.rank) && model.is_none() {
            return Err(NodeError::Protocol("finder holds no model".into()));
        }
        Ok(NodeOutcome {
            rank: cfg.rank,
            status,
            finder,
            model,
            local_solver,
            rounds,
            started,
            first_local_find,
            finished: Instant::now(),
            solver_statuses: statuses,
            exchange: exchange.stats(),
        })
    }

    fn round_loop<T: Transport + ?Sized>(
        &self,
        transport: &mut T,
        solvers: &[Arc<dyn CoreSolver>],
        slot: &ResultSlot,
        exchange: &ClauseExchange,
        started: Instant,
    ) -> Result<(Verdict, u64), NodeError> {
        let cfg = &self.config;
        let b = cfg.buffer_ints;
        let deadline = cfg.time_limit.map(|t| started + t);
        let mut round = 0u64;
        loop {
            let mut wait = cfg.round_interval;
            if let Some(d) = deadline {
                wait = wait.min(d.saturating_duration_since(Instant::now()));
            }
            slot.wait(wait);
            round += 1;

            let (status, finder) = match slot.status() {
                Some(Status::Sat) => (RoundStatus::Sat, Some(cfg.rank)),
                Some(Status::Unsat) => (RoundStatus::Unsat, Some(cfg.rank)),
                _ if deadline.is_some_and(|d| Instant::now() >= d) => (RoundStatus::Timeout, Some(cfg.rank)),
                _ => (RoundStatus::Running, None),
            };
            let fill = cfg.sharing.then(|| exchange.fill_buffer());
            let payload = match &fill {
                Some(f) => f.buffer.payload().to_vec(),
                None => vec![0; b],
            };
            let msg = RoundMessage {
                status,
                finder,
                payload,
            };
            let gathered = transport.all_gather(&msg.encode())?;
            let messages = gathered
                .chunks(b + HEADER_INTS)
                .map(|w| RoundMessage::decode(w, b))
                .collect::<Result<Vec<_>, _>>()?;
            if messages.len() != cfg.process_count {
                return Err(NodeError::Protocol(format!("{} round messages", messages.len())));
            }
            let verdict = decide(&messages)?;
            if verdict != Verdict::Continue {
                return Ok((verdict, round));
            }
            if let Some(fill) = fill {
                self.share(messages, solvers, exchange, &fill.buffer);
                exchange.periodic_reset(round);
            }
        }
    }

    fn share(
        &self,
        messages: Vec<RoundMessage>,
        solvers: &[Arc<dyn CoreSolver>],
        exchange: &ClauseExchange,
        own: &ClauseBuffer,
    ) {
        let payloads: Vec<Lit> = messages.into_iter().flat_map(|m| m.payload).collect();
        let import = exchange.import_buffers(&payloads, self.config.rank, Some(self.formula.num_vars()));
        for (i, clauses) in import.per_solver.iter().enumerate() {
            for c in clauses {
                if let Some(obs) = &self.observer {
                    obs(i, c);
                }
                solvers[i].add_learned_clause(c);
            }
        }
        if let Some(i) = exchange.underfill_target(own) {
            solvers[i].increase_clause_production();
        }
    }
}

/// Runs one process over `transport` with the default core solver.
pub fn start_node<T: Transport + ?Sized>(
    config: ProcessConfig,
    formula: Arc<Formula>,
    transport: &mut T,
) -> Result<NodeOutcome, NodeError> {
    Node::new(config, formula).run(transport)
}

/// Runs `template.process_count` virtual processes in this program over an
/// in-process transport. Outcomes are indexed by rank.
pub fn run_local(
    template: &ProcessConfig,
    formula: Arc<Formula>,
    factory: Option<SolverFactory>,
    observer: Option<ImportObserver>,
) -> Result<Vec<NodeOutcome>, NodeError> {
    let endpoints = LocalCluster::new(template.process_count.max(1));
    let handles: Vec<_> = endpoints
        .into_iter()
        .enumerate()
        .map(|(rank, mut ep)| {
            let mut node = Node::new(
                ProcessConfig {
                    rank,
                    ..template.clone()
                },
                formula.clone(),
            );
            if let Some(f) = &factory {
                node = node.with_solver_factory(f.clone());
            }
            if let Some(o) = &observer {
                node = node.with_import_observer(o.clone());
            }
            thread::Builder::new()
                .name(format!("control-{rank}"))
                .spawn(move || node.run(&mut ep))
                .expect("spawn control thread")
        })
        .collect();
    let mut outcomes = Vec::with_capacity(handles.len());
    let mut first_err = None;
    for (rank, h) in handles.into_iter().enumerate() {
        match h.join() {
            Ok(Ok(o)) => outcomes.push(o),
            Ok(Err(e)) => {
                first_err.get_or_insert(e);
            }
            Err(_) => {
                first_err.get_or_insert(NodeError::Protocol(format!("control thread {rank} panicked")));
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(outcomes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversify::PhaseMode;
    use crate::generators::{pigeonhole, random_3sat_threshold};
    use crate::oracle;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn config(processes: usize, solvers: usize) -> ProcessConfig {
        ProcessConfig {
            process_count: processes,
            solvers_per_process: solvers,
            round_interval: Duration::from_millis(20),
            ..ProcessConfig::default()
        }
    }

    fn formula(clauses: &[&[Lit]]) -> Arc<Formula> {
        Arc::new(Formula::from_raw(0, clauses.iter().map(|c| c.to_vec())).unwrap())
    }

    #[test]
    fn config_invariants() {
        assert!(config(1, 1).validate().is_ok());
        assert!(ProcessConfig { rank: 2, ..config(2, 1) }.validate().is_err());
        assert!(ProcessConfig { buffer_ints: 15, ..config(1, 1) }.validate().is_err());
        assert!(ProcessConfig {
            round_interval: Duration::from_micros(500),
            ..config(1, 1)
        }
        .validate()
        .is_err());
        assert!(config(1, 0).validate().is_err());
    }

    #[test]
    fn checksum_ignores_rank_only() {
        let a = config(4, 2);
        assert_eq!(a.checksum(), ProcessConfig { rank: 3, ..a.clone() }.checksum());
        assert_ne!(a.checksum(), ProcessConfig { seed: 1, ..a.clone() }.checksum());
        assert_ne!(a.checksum(), ProcessConfig { buffer_ints: 100, ..a }.checksum());
    }

    #[test]
    fn round_message_round_trip() {
        let m = RoundMessage {
            status: RoundStatus::Sat,
            finder: Some(3),
            payload: vec![1, 0, 0, 0],
        };
        let w = m.encode();
        assert_eq!(w.len(), 6);
        assert_eq!(&w[..2], &[1, 3]);
        assert_eq!(RoundMessage::decode(&w, 4).unwrap(), m);
        assert!(RoundMessage::decode(&[0, 2, 0, 0, 0, 0], 4).is_err());
        assert!(RoundMessage::decode(&[1, -1, 0, 0, 0, 0], 4).is_err());
        assert!(RoundMessage::decode(&[9, 0, 0, 0, 0, 0], 4).is_err());
        assert!(RoundMessage::decode(&[0, -1, 0], 4).is_err());
    }

    fn msg(status: RoundStatus, finder: Option<usize>) -> RoundMessage {
        RoundMessage {
            status,
            finder,
            payload: Vec::new(),
        }
    }

    #[test]
    fn decide_rules() {
        use RoundStatus::*;
        assert_eq!(decide(&[msg(Running, None), msg(Running, None)]).unwrap(), Verdict::Continue);
        assert_eq!(
            decide(&[msg(Running, None), msg(Sat, Some(1)), msg(Sat, Some(2))]).unwrap(),
            Verdict::Done {
                status: Status::Sat,
                finder: Some(1)
            }
        );
        assert!(matches!(
            decide(&[msg(Unsat, Some(0)), msg(Sat, Some(1))]),
            Err(NodeError::Inconsistent { sat: 1, unsat: 0 })
        ));
        assert_eq!(
            decide(&[msg(Timeout, Some(0)), msg(Running, None)]).unwrap(),
            Verdict::Done {
                status: Status::Unknown,
                finder: None
            }
        );
        assert_eq!(
            decide(&[msg(Timeout, Some(0)), msg(Unsat, Some(1))]).unwrap(),
            Verdict::Done {
                status: Status::Unsat,
                finder: Some(1)
            }
        );
    }

    #[test]
    fn single_unit_clause() {
        let out = run_local(&config(1, 1), formula(&[&[1]]), None, None).unwrap();
        assert_eq!(out[0].status, Status::Sat);
        assert_eq!(out[0].finder, Some(0));
        assert_eq!(out[0].model.as_ref().unwrap().to_lits(), vec![1]);
    }

    /// Counts interrupts posted to the wrapped solver.
    struct Watched {
        inner: CdclSolver,
        interrupts: Arc<AtomicUsize>,
    }

    impl CoreSolver for Watched {
        fn add_clause(&self, c: &[Lit]) -> Result<(), SolverError> {
            self.inner.add_clause(c)
        }
        fn solve(&self) -> SatResult {
            self.inner.solve()
        }
        fn set_solver_interrupt(&self) {
            self.interrupts.fetch_add(1, Ordering::SeqCst);
            self.inner.set_solver_interrupt()
        }
        fn unset_solver_interrupt(&self) {
            self.inner.unset_solver_interrupt()
        }
        fn set_phase(&self, v: usize, p: bool) {
            self.inner.set_phase(v, p)
        }
        fn diversify(&self, r: usize, s: usize) -> Result<(), SolverError> {
            self.inner.diversify(r, s)
        }
        fn add_learned_clause(&self, c: &Clause) {
            self.inner.add_learned_clause(c)
        }
        fn set_learned_clause_callback(&self, sink: Arc<dyn LearnedClauseSink>) {
            self.inner.set_learned_clause_callback(sink)
        }
        fn increase_clause_production(&self) {
            self.inner.increase_clause_production()
        }
    }

    fn watched_factory(counters: Arc<Mutex<Vec<Arc<AtomicUsize>>>>) -> SolverFactory {
        Arc::new(move |_| {
            let c = Arc::new(AtomicUsize::new(0));
            counters.lock().unwrap().push(c.clone());
            Arc::new(Watched {
                inner: CdclSolver::new(),
                interrupts: c,
            }) as Arc<dyn CoreSolver>
        })
    }

    #[test]
    fn unsat_interrupts_every_thread() {
        let counters = Arc::new(Mutex::new(Vec::new()));
        let out = run_local(
            &config(1, 4),
            Arc::new(pigeonhole(6, 5)),
            Some(watched_factory(counters.clone())),
            None,
        )
        .unwrap();
        assert_eq!(out[0].status, Status::Unsat);
        assert_eq!(out[0].solver_statuses.len(), 4);
        assert!(out[0].solver_statuses.iter().all(|&s| s != Status::Sat));
        let counters = counters.lock().unwrap();
        assert_eq!(counters.len(), 4);
        assert!(counters.iter().all(|c| c.load(Ordering::SeqCst) >= 1));
    }

    #[test]
    fn virtual_processes_agree() {
        let f = Arc::new(random_3sat_threshold(20, 3));
        let expected = oracle::status(&f).unwrap();
        let out = run_local(&config(4, 1), f.clone(), None, None).unwrap();
        assert_eq!(out.len(), 4);
        let finder = out[0].finder;
        assert!(finder.is_some());
        for o in &out {
            assert_eq!(o.status, expected);
            assert_eq!(o.finder, finder);
        }
        if expected == Status::Sat {
            let with_model: Vec<_> = out.iter().filter(|o| o.model.is_some()).collect();
            assert_eq!(with_model.len(), 1);
            assert_eq!(Some(with_model[0].rank), finder);
        }
    }

    #[test]
    fn concurrent_offers_record_once() {
        for _ in 0..50 {
            let slot = Arc::new(ResultSlot::new(Vec::new()));
            let wins: usize = (0..8)
                .map(|i| {
                    let slot = slot.clone();
                    thread::spawn(move || slot.offer(SatResult::Unsat, i) as usize)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .map(|h| h.join().unwrap())
                .sum();
            assert_eq!(wins, 1);
            assert!(slot.recorded().is_some());
        }
    }

    #[test]
    fn unknown_offers_are_ignored() {
        let slot = ResultSlot::new(Vec::new());
        assert!(!slot.offer(SatResult::Unknown, 0));
        assert!(slot.recorded().is_none());
        assert!(slot.offer(SatResult::Unsat, 1));
        assert_eq!(slot.recorded(), Some((Status::Unsat, 1)));
    }

    #[test]
    fn time_limit_gives_unknown() {
        let cfg = ProcessConfig {
            time_limit: Some(Duration::from_millis(50)),
            ..config(2, 1)
        };
        let start = Instant::now();
        let out = run_local(&cfg, Arc::new(pigeonhole(11, 10)), None, None).unwrap();
        assert!(start.elapsed() < Duration::from_secs(5));
        for o in &out {
            assert_eq!(o.status, Status::Unknown);
            assert_eq!(o.finder, None);
        }
    }

    #[test]
    fn degenerate_portfolio_matches_bare_solver() {
        let f = Arc::new(random_3sat_threshold(60, 11));
        let bare = CdclSolver::new();
        bare.trace_decisions();
        load_formula(&bare, &f);
        bare.diversify(0, 1).unwrap();
        let bare_result = bare.solve();

        let traced: Arc<Mutex<Option<Arc<CdclSolver>>>> = Arc::new(Mutex::new(None));
        let keep = traced.clone();
        let factory: SolverFactory = Arc::new(move |_| {
            let s = Arc::new(CdclSolver::new());
            s.trace_decisions();
            *keep.lock().unwrap() = Some(s.clone());
            s as Arc<dyn CoreSolver>
        });
        let cfg = ProcessConfig {
            sharing: false,
            diversification: DiversificationMode {
                phases: PhaseMode::None,
                native: true,
            },
            ..config(1, 1)
        };
        let out = run_local(&cfg, f, Some(factory), None).unwrap();
        assert_eq!(out[0].status, bare_result.status());
        if let Some(m) = bare_result.model() {
            assert_eq!(out[0].model.as_ref(), Some(m));
        }
        let s = traced.lock().unwrap().clone().unwrap();
        assert_eq!(s.decision_trace(), bare.decision_trace());
    }

    #[test]
    fn sharing_delivers_clauses() {
        let delivered = Arc::new(AtomicUsize::new(0));
        let d = delivered.clone();
        let observer: ImportObserver = Arc::new(move |_, _| {
            d.fetch_add(1, Ordering::Relaxed);
        });
        let cfg = ProcessConfig {
            round_interval: Duration::from_millis(5),
            ..config(2, 2)
        };
        let out = run_local(&cfg, Arc::new(pigeonhole(8, 7)), None, Some(observer)).unwrap();
        assert_eq!(out[0].status, Status::Unsat);
        if out[0].rounds > 2 {
            assert!(delivered.load(Ordering::Relaxed) > 0);
        }
    }

    #[test]
    fn mismatched_configs_abort() {
        let mut eps = LocalCluster::new(2);
        let mut e1 = eps.pop().unwrap();
        let mut e0 = eps.pop().unwrap();
        let f = formula(&[&[1]]);
        let f1 = f.clone();
        let h = thread::spawn(move || {
            start_node(
                ProcessConfig {
                    rank: 1,
                    seed: 99,
                    ..config(2, 1)
                },
                f1,
                &mut e1,
            )
        });
        assert!(start_node(config(2, 1), f, &mut e0).is_err());
        assert!(h.join().unwrap().is_err());
    }

    #[test]
    fn model_is_padded_to_formula() {
        let f = Arc::new(Formula::from_raw(5, [vec![2]]).unwrap());
        let out = run_local(&config(1, 2), f, None, None).unwrap();
        let m = out[0].model.as_ref().unwrap();
        assert_eq!(m.num_vars(), 5);
        assert_eq!(m.get(2).unwrap(), crate::types::Value::True);
    }
}
