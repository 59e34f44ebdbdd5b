//! The shared export pool and the fixed-size round payload.
//!
//! Payload layout: zero-terminated clauses in nondecreasing length order,
//! followed by zero padding up to exactly `B` integers. Literals are never
//! zero and empty clauses never enter the pool, so the encoding is
//! self-delimiting: the first zero that does not close a clause starts the padding.

use std::sync::{Mutex, TryLockError};

use thiserror::Error;

use crate::types::{normalize_clause, var_of, Clause, Lit, Normalized};

pub const DEFAULT_BUFFER_INTS: usize = 1500;

/// Why the pool did or did not take a clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admitted,
    /// Another producer held the pool.
    Contended,
    /// Capacity exhausted for this round.
    Full,
}

#[derive(Default)]
struct PoolInner {
    clauses: Vec<Clause>,
    literals: usize,
}

/// Bounded clause pool with a single non-blocking producer slot.
pub struct ExportPool {
    inner: Mutex<PoolInner>,
    capacity: usize,
}

impl ExportPool {
    /// `capacity` counts literals.
    pub fn new(capacity: usize) -> Self {
        ExportPool {
            inner: Mutex::new(PoolInner::default()),
            capacity,
        }
    }

    /// Never blocks: fails with [`Admission::Contended`] if the slot is taken.
    pub fn try_admit(&self, clause: &[Lit]) -> Admission {
        let mut inner = match self.inner.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => return Admission::Contended,
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
        };
        if inner.literals + clause.len() > self.capacity {
            return Admission::Full;
        }
        inner.literals += clause.len();
        inner.clauses.push(Clause::from_normalized(clause.to_vec()));
        Admission::Admitted
    }

    /// Empties the pool. Blocks only the calling (communication) thread.
    pub fn drain(&self) -> Vec<Clause> {
        let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        inner.literals = 0;
        std::mem::take(&mut inner.clauses)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One round's payload: exactly `B` integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseBuffer {
    payload: Vec<Lit>,
    used: usize,
}

/// Clauses that made it into a buffer and those that did not fit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fill {
    pub buffer: ClauseBuffer,
    pub included: Vec<Clause>,
    pub discarded: Vec<Clause>,
}

impl ClauseBuffer {
    pub fn empty(size: usize) -> Self {
        ClauseBuffer {
            payload: vec![0; size],
            used: 0,
        }
    }

    /// Shortest-first greedy packing; each clause costs its length plus one terminator.
    /// Ties keep the pool order.
    pub fn fill(mut clauses: Vec<Clause>, size: usize) -> Fill {
        clauses.retain(|c| !c.is_empty());
        clauses.sort_by_key(Clause::len);
        let mut payload = Vec::with_capacity(size);
        let fits = clauses
            .iter()
            .scan(0usize, |used, c| {
                *used += c.len() + 1;
                Some(*used <= size)
            })
            .take_while(|&f| f)
            .count();
        let discarded = clauses.split_off(fits);
        for c in &clauses {
            payload.extend_from_slice(c.lits());
            payload.push(0);
        }
        let used = payload.len();
        payload.resize(size, 0);
        Fill {
            buffer: ClauseBuffer { payload, used },
            included: clauses,
            discarded,
        }
    }

    pub fn payload(&self) -> &[Lit] {
        &self.payload
    }

    pub fn into_payload(self) -> Vec<Lit> {
        self.payload
    }

    /// Integers occupied by clauses and their terminators.
    pub fn used(&self) -> usize {
        self.used
    }

    pub fn utilization(&self) -> f64 {
        if self.payload.is_empty() {
            1.0
        } else {
            self.used as f64 / self.payload.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("nonzero value at offset {0} after the final clause")]
    NonzeroTail(usize),
    #[error("payload ends inside a clause")]
    Unterminated,
    #[error("literal {lit} at offset {offset} exceeds the variable count")]
    VariableOutOfRange { lit: Lit, offset: usize },
    #[error("clause ending at offset {0} repeats or negates a variable")]
    NotNormalized(usize),
}

/// Decodes a payload. With `num_vars` set, every literal must be in range.
pub fn decode(payload: &[Lit], num_vars: Option<usize>) -> Result<Vec<Clause>, DecodeError> {
    let mut out = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    for (offset, &x) in payload.iter().enumerate() {
        if x != 0 {
            if num_vars.is_some_and(|n| var_of(x) > n) {
                return Err(DecodeError::VariableOutOfRange { lit: x, offset });
            }
            current.push(x);
            continue;
        }
        if current.is_empty() {
            if let Some(pos) = payload[offset..].iter().position(|&y| y != 0) {
                return Err(DecodeError::NonzeroTail(offset + pos));
            }
            return Ok(out);
        }
        match normalize_clause(&current) {
            Ok(Normalized::Clause(c)) if c.len() == current.len() => out.push(c),
            _ => return Err(DecodeError::NotNormalized(offset)),
        }
        current.clear();
    }
    if !current.is_empty() {
        return Err(DecodeError::Unterminated);
    }
    Ok(out)
}
