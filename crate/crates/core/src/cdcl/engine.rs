//! Single-threaded CDCL search state.
//!
//! Two watched literals with blockers, VSIDS activity on an indexed heap,
//! first-UIP learning, Luby restarts and glue-based clause deletion.
//! Literals are stored internally as `2 * (var - 1) + sign`.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{luby, SearchConfig, PERMANENT_GLUE};
use super::heap::VarHeap;
use crate::solver::LearnedClauseSink;
use crate::types::{Assignment, Clause, Lit, SatResult, Value};

const TRUE: i8 = 1;
const FALSE: i8 = -1;
const UNDEF: i8 = 0;
const NO_REASON: u32 = u32::MAX;

const CLAUSE_DECAY: f64 = 0.999;
const REDUCE_FIRST: usize = 2000;
const REDUCE_STEP: usize = 300;

#[inline]
pub(crate) fn to_internal(lit: Lit) -> usize {
    let v = lit.unsigned_abs() as usize - 1;
    2 * v + usize::from(lit < 0)
}

#[inline]
pub(crate) fn to_external(x: usize) -> Lit {
    let v = (x >> 1) as Lit + 1;
    if x & 1 == 1 {
        -v
    } else {
        v
    }
}

#[derive(Debug, Clone)]
struct ClauseData {
    lits: Vec<usize>,
    learnt: bool,
    foreign: bool,
    glue: u32,
    activity: f64,
    deleted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: usize,
}

/// Counters exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub restarts: u64,
    pub learned: u64,
    pub exported: u64,
    pub imported: u64,
    pub deleted: u64,
}

/// Cross-thread inputs the search loop polls without blocking.
pub(crate) struct SearchContext<'a> {
    pub interrupt: &'a AtomicBool,
    pub export_limit: &'a AtomicUsize,
    pub iterations: &'a AtomicU64,
    pub import_queue: &'a Mutex<Vec<Clause>>,
    pub phase_queue: &'a Mutex<Vec<(usize, bool)>>,
    pub sink: Arc<dyn LearnedClauseSink>,
}

/// Outcome of conflict analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Learned {
    /// The asserting literal first, then the literal with the highest remaining level.
    pub lits: Vec<usize>,
    pub backjump_level: usize,
    pub glue: u32,
}

pub(crate) struct Engine {
    num_vars: usize,
    vals: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<usize>,
    trail_lim: Vec<usize>,
    qhead: usize,

    clauses: Vec<ClauseData>,
    watches: Vec<Vec<Watcher>>,
    // sorted external literals of stored original and imported clauses
    known: HashSet<Vec<Lit>>,

    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    phase: Vec<Option<bool>>,
    seen: Vec<bool>,

    config: SearchConfig,
    rng: ChaCha8Rng,
    unsat: bool,
    deletable_learnts: usize,
    reduce_target: usize,
    pub stats: Stats,
    pub trace: Option<Vec<Lit>>,
}

impl Engine {
    pub fn new(config: SearchConfig) -> Self {
        Engine {
            num_vars: 0,
            vals: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            clauses: Vec::new(),
            watches: Vec::new(),
            known: HashSet::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            unsat: false,
            deletable_learnts: 0,
            reduce_target: REDUCE_FIRST,
            stats: Stats::default(),
            trace: None,
        }
    }

    pub fn set_config(&mut self, config: SearchConfig) {
        self.rng = ChaCha8Rng::seed_from_u64(config.seed);
        self.config = config;
    }

    pub fn config(&self) -> SearchConfig {
        self.config
    }

    #[cfg(test)]
    pub fn is_unsat(&self) -> bool {
        self.unsat
    }

    pub fn ensure_vars(&mut self, n: usize) {
        if n <= self.num_vars {
            return;
        }
        let old = self.num_vars;
        self.num_vars = n;
        self.vals.resize(2 * n, UNDEF);
        self.watches.resize_with(2 * n, Vec::new);
        self.level.resize(n, 0);
        self.reason.resize(n, NO_REASON);
        self.activity.resize(n, 0.0);
        self.phase.resize(n, None);
        self.seen.resize(n, false);
        self.heap.grow(n);
        for v in old..n {
            self.heap.insert(v, &self.activity);
        }
    }

    #[inline]
    fn value(&self, x: usize) -> i8 {
        self.vals[x]
    }

    #[inline]
    pub fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Value of a variable fixed at the root level.
    pub fn root_value(&self, var: usize) -> Value {
        if var == 0 || var > self.num_vars {
            return Value::Unassigned;
        }
        let x = 2 * (var - 1);
        if self.level[var - 1] != 0 {
            return Value::Unassigned;
        }
        match self.vals[x] {
            TRUE => Value::True,
            FALSE => Value::False,
            _ => Value::Unassigned,
        }
    }

    fn assign(&mut self, x: usize, reason: u32) {
        debug_assert_eq!(self.vals[x], UNDEF);
        let v = x >> 1;
        self.vals[x] = TRUE;
        self.vals[x ^ 1] = FALSE;
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = reason;
        self.trail.push(x);
    }

    pub fn backtrack(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level];
        for i in (start..self.trail.len()).rev() {
            let x = self.trail[i];
            let v = x >> 1;
            // phase saving
            self.phase[v] = Some(x & 1 == 0);
            self.vals[x] = UNDEF;
            self.vals[x ^ 1] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level);
        self.qhead = start;
    }

    pub fn set_phase(&mut self, var: usize, phase: bool) {
        if var >= 1 && var <= self.num_vars {
            self.phase[var - 1] = Some(phase);
        }
    }

    /// Adds a clause at the root level. Returns false when the formula became UNSAT.
    ///
    /// Literals already false at the root stay in the clause but are never chosen
    /// as watches while a non-false candidate remains.
    pub fn add_root_clause(&mut self, ext: &[Lit], learnt: bool, foreign: bool) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if self.unsat {
            return false;
        }
        if ext.is_empty() {
            self.unsat = true;
            return false;
        }
        let mut key = ext.to_vec();
        key.sort_unstable();
        if !self.known.insert(key) {
            return true;
        }
        self.ensure_vars(ext.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0));
        let mut lits: Vec<usize> = ext.iter().map(|&l| to_internal(l)).collect();
        if foreign {
            self.stats.imported += 1;
        }
        // order: true literals, then unassigned, then false
        lits.sort_by_key(|&x| match self.value(x) {
            TRUE => 0,
            UNDEF => 1,
            _ => 2,
        });
        let first = self.value(lits[0]);
        if first == FALSE {
            self.unsat = true;
            return false;
        }
        if lits.len() == 1 {
            if first == UNDEF {
                self.assign(lits[0], NO_REASON);
            }
            return true;
        }
        let glue = if learnt { lits.len() as u32 } else { 0 };
        let cref = self.attach(lits, learnt, foreign, glue);
        let c = &self.clauses[cref as usize];
        if first == UNDEF && self.value(c.lits[1]) == FALSE {
            let unit = c.lits[0];
            self.assign(unit, cref);
        }
        true
    }

    fn attach(&mut self, lits: Vec<usize>, learnt: bool, foreign: bool, glue: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0]].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1]].push(Watcher {
            cref,
            blocker: lits[0],
        });
        if learnt && glue > PERMANENT_GLUE {
            self.deletable_learnts += 1;
        }
        self.clauses.push(ClauseData {
            lits,
            learnt,
            foreign,
            glue,
            activity: 0.0,
            deleted: false,
        });
        cref
    }

    /// Applies every pending implication. Returns the falsified clause, if any.
    pub fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.vals[w.blocker] == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let c = &mut self.clauses[cref as usize];
                if c.lits[0] == false_lit {
                    c.lits.swap(0, 1);
                }
                let first = c.lits[0];
                let kept = Watcher {
                    cref,
                    blocker: first,
                };
                if first != w.blocker && self.vals[first] == TRUE {
                    ws[j] = kept;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.lits.len() {
                    if self.vals[c.lits[k]] != FALSE {
                        c.lits.swap(1, k);
                        let new_watch = c.lits[1];
                        self.watches[new_watch].push(kept);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = kept;
                j += 1;
                if self.vals[first] == FALSE {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.assign(first, cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in &mut self.clauses {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP analysis of a conflict at a positive decision level.
    pub fn analyze(&mut self, conflict: u32) -> Learned {
        debug_assert!(self.decision_level() > 0);
        let current = self.decision_level() as u32;
        let mut learnt: Vec<usize> = vec![usize::MAX];
        let mut pending = 0usize;
        let mut index = self.trail.len();
        let mut p: Option<usize> = None;
        let mut cref = conflict;
        loop {
            if self.clauses[cref as usize].learnt {
                self.bump_clause(cref);
            }
            let skip = usize::from(p.is_some());
            for k in skip..self.clauses[cref as usize].lits.len() {
                let q = self.clauses[cref as usize].lits[k];
                let v = q >> 1;
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index] >> 1] {
                    break;
                }
            }
            let lit = self.trail[index];
            let v = lit >> 1;
            self.seen[v] = false;
            p = Some(lit);
            pending -= 1;
            if pending == 0 {
                break;
            }
            cref = self.reason[v];
            debug_assert_ne!(cref, NO_REASON);
        }
        learnt[0] = p.unwrap() ^ 1;
        for &q in &learnt[1..] {
            self.seen[q >> 1] = false;
        }
        let backjump_level = if learnt.len() == 1 {
            0
        } else {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k] >> 1] > self.level[learnt[best] >> 1] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            self.level[learnt[1] >> 1] as usize
        };
        let mut levels: Vec<u32> = learnt.iter().map(|&q| self.level[q >> 1]).collect();
        levels.sort_unstable();
        levels.dedup();
        Learned {
            lits: learnt,
            backjump_level,
            glue: levels.len() as u32,
        }
    }

    /// Stores a learned clause after backjumping and asserts its first literal.
    /// Returns the clause in external form when it passes the export filter.
    fn learn(&mut self, learned: Learned, export_limit: usize) -> Option<Vec<Lit>> {
        self.stats.learned += 1;
        let exported = (learned.lits.len() <= export_limit)
            .then(|| learned.lits.iter().map(|&x| to_external(x)).collect());
        let asserting = learned.lits[0];
        if learned.lits.len() == 1 {
            self.assign(asserting, NO_REASON);
        } else {
            let cref = self.attach(learned.lits, true, false, learned.glue);
            self.bump_clause(cref);
            self.assign(asserting, cref);
        }
        exported
    }

    /// Next decision literal, or `None` when every variable is assigned.
    pub fn pick_branch(&mut self) -> Option<usize> {
        let mut var = None;
        if self.config.random_decision_prob > 0.0
            && !self.heap.is_empty()
            && self.rng.gen::<f64>() < self.config.random_decision_prob
        {
            let v = self.heap.at(self.rng.gen_range(0..self.heap.len()));
            if self.vals[2 * v] == UNDEF {
                var = Some(v);
            }
        }
        if var.is_none() {
            while let Some(v) = self.heap.pop(&self.activity) {
                if self.vals[2 * v] == UNDEF {
                    var = Some(v);
                    break;
                }
            }
        }
        let v = var?;
        let positive = self.phase[v].unwrap_or(false);
        Some(2 * v + usize::from(!positive))
    }

    pub fn new_decision(&mut self, x: usize) {
        self.stats.decisions += 1;
        if let Some(t) = self.trace.as_mut() {
            t.push(to_external(x));
        }
        self.trail_lim.push(self.trail.len());
        self.assign(x, NO_REASON);
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let v = c.lits[0] >> 1;
        self.vals[c.lits[0]] == TRUE && self.reason[v] == cref
    }

    /// Deletes half of the non-permanent learned clauses, worst glue and lowest activity first.
    fn reduce_db(&mut self) {
        let mut candidates: Vec<u32> = (0..self.clauses.len() as u32)
            .filter(|&c| {
                let cd = &self.clauses[c as usize];
                cd.learnt && !cd.deleted && cd.glue > PERMANENT_GLUE && !self.locked(c)
            })
            .collect();
        candidates.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.glue
                .cmp(&ca.glue)
                .then(ca.activity.total_cmp(&cb.activity))
        });
        let remove = candidates.len() / 2;
        for &c in &candidates[..remove] {
            let cd = &mut self.clauses[c as usize];
            cd.deleted = true;
            if cd.foreign {
                let mut key: Vec<Lit> = cd.lits.iter().map(|&x| to_external(x)).collect();
                key.sort_unstable();
                self.known.remove(&key);
            }
            cd.lits = Vec::new();
        }
        self.deletable_learnts -= remove;
        self.stats.deleted += remove as u64;
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
        self.reduce_target += REDUCE_STEP;
    }

    fn model(&self) -> Assignment {
        let bools: Vec<bool> = (0..self.num_vars).map(|v| self.vals[2 * v] == TRUE).collect();
        Assignment::from_bools(&bools)
    }

    /// Root-level merge of queued foreign clauses and phase suggestions.
    /// Returns false when the formula became UNSAT.
    fn import(&mut self, ctx: &SearchContext<'_>) -> bool {
        if let Ok(mut q) = ctx.phase_queue.try_lock() {
            for (var, phase) in q.drain(..) {
                self.set_phase(var, phase);
            }
        }
        let queued = match ctx.import_queue.try_lock() {
            Ok(mut q) => std::mem::take(&mut *q),
            Err(_) => return true,
        };
        for c in queued {
            if !self.add_root_clause(c.lits(), true, true) {
                return false;
            }
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return false;
        }
        true
    }

    pub fn search(&mut self, ctx: &SearchContext<'_>) -> SatResult {
        if ctx.interrupt.load(Ordering::Acquire) {
            return SatResult::Unknown;
        }
        if self.unsat {
            return SatResult::Unsat;
        }
        self.backtrack(0);
        if !self.import(ctx) {
            return SatResult::Unsat;
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return SatResult::Unsat;
        }
        let mut restart_limit = self.config.restart_base * luby(self.stats.restarts);
        let mut since_restart = 0u64;
        loop {
            ctx.iterations.fetch_add(1, Ordering::Relaxed);
            if ctx.interrupt.load(Ordering::Relaxed) {
                self.backtrack(0);
                return SatResult::Unknown;
            }
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return SatResult::Unsat;
                }
                let learned = self.analyze(conflict);
                self.backtrack(learned.backjump_level);
                let limit = ctx.export_limit.load(Ordering::Relaxed);
                if let Some(ext) = self.learn(learned, limit) {
                    self.stats.exported += 1;
                    ctx.sink.write(&ext);
                }
                self.var_inc /= self.config.var_decay;
                self.cla_inc /= CLAUSE_DECAY;
            } else {
                if since_restart >= restart_limit {
                    self.backtrack(0);
                    self.stats.restarts += 1;
                    since_restart = 0;
                    restart_limit = self.config.restart_base * luby(self.stats.restarts);
                    if !self.import(ctx) {
                        return SatResult::Unsat;
                    }
                    continue;
                }
                if self.deletable_learnts >= self.reduce_target {
                    self.reduce_db();
                }
                match self.pick_branch() {
                    None => {
                        let model = self.model();
                        self.backtrack(0);
                        return SatResult::Sat(model);
                    }
                    Some(x) => self.new_decision(x),
                }
            }
        }
    }

    pub fn contains_clause(&self, ext: &[Lit]) -> bool {
        let mut key = ext.to_vec();
        key.sort_unstable();
        if self.known.contains(&key) {
            return true;
        }
        self.clauses.iter().any(|c| {
            !c.deleted && {
                let mut k: Vec<Lit> = c.lits.iter().map(|&x| to_external(x)).collect();
                k.sort_unstable();
                k == key
            }
        })
    }

    pub fn live_clauses(&self) -> usize {
        self.clauses.iter().filter(|c| !c.deleted).count()
    }

    /// Checks trail and watch invariants. Meaningful once propagation reached a fixpoint.
    pub fn audit(&self) -> Result<(), String> {
        let mut prev = 0u32;
        for &x in &self.trail {
            let v = x >> 1;
            if self.vals[x] != TRUE {
                return Err(format!("trail literal {} is not true", to_external(x)));
            }
            if self.level[v] < prev {
                return Err("decision levels decrease along the trail".into());
            }
            prev = self.level[v];
            let r = self.reason[v];
            if r != NO_REASON {
                let c = &self.clauses[r as usize];
                if c.deleted || c.lits[0] != x {
                    return Err(format!("bad reason for {}", to_external(x)));
                }
                for &q in &c.lits[1..] {
                    if self.vals[q] != FALSE || self.level[q >> 1] > self.level[v] {
                        return Err(format!("reason of {} is not unit", to_external(x)));
                    }
                }
            }
        }
        let mut counts = vec![0usize; self.clauses.len()];
        for (lit, ws) in self.watches.iter().enumerate() {
            for w in ws {
                let c = &self.clauses[w.cref as usize];
                if c.deleted {
                    return Err("watch on deleted clause".into());
                }
                if c.lits[0] != lit && c.lits[1] != lit {
                    return Err(format!("clause {} watched by a non-watch literal", w.cref));
                }
                counts[w.cref as usize] += 1;
            }
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if c.deleted {
                continue;
            }
            if counts[i] != 2 || c.lits[0] == c.lits[1] {
                return Err(format!("clause {i} has {} watches", counts[i]));
            }
            if self.qhead == self.trail.len() {
                for &w in &c.lits[..2] {
                    if self.vals[w] == FALSE {
                        let wl = self.level[w >> 1];
                        let ok = c
                            .lits
                            .iter()
                            .any(|&q| self.vals[q] == TRUE && self.level[q >> 1] <= wl);
                        if !ok {
                            return Err(format!("clause {i} has a false watch and is not satisfied"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
