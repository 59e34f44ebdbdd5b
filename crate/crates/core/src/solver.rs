//! The black-box contract every portfolio member implements.
//!
//! All methods take `&self` and must be safe to call from several threads at
//! once. The orchestrator drives `solve` from a dedicated search thread while
//! it calls the control methods from its own thread.

use std::sync::Arc;

use thiserror::Error;

use crate::types::{Clause, Formula, Lit, SatResult, TypesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("malformed clause: {0}")]
    MalformedClause(#[from] TypesError),
    #[error("diversify rank {rank} is not below portfolio size {size}")]
    RankOutOfRange { rank: usize, size: usize },
}

/// Receives clauses exported by a core solver.
///
/// Called from the solver's search thread, so implementations must not block.
pub trait LearnedClauseSink: Send + Sync {
    fn write(&self, clause: &[Lit]);
}

/// Sink that drops everything. Used when no callback has been installed.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl LearnedClauseSink for NullSink {
    fn write(&self, _clause: &[Lit]) {}
}

impl<F> LearnedClauseSink for F
where
    F: Fn(&[Lit]) + Send + Sync,
{
    fn write(&self, clause: &[Lit]) {
        self(clause)
    }
}

pub trait CoreSolver: Send + Sync {
    /// Loads one clause of the input formula. Raw integers, normalized here;
    /// tautologies are accepted and ignored.
    fn add_clause(&self, clause: &[Lit]) -> Result<(), SolverError>;

    /// Searches until an answer is found or an interrupt is posted.
    fn solve(&self) -> SatResult;

    /// Sticky: `solve` keeps returning UNKNOWN until [`unset_solver_interrupt`].
    ///
    /// [`unset_solver_interrupt`]: CoreSolver::unset_solver_interrupt
    fn set_solver_interrupt(&self);

    fn unset_solver_interrupt(&self);

    /// Suggests the polarity tried first for `var`. May be ignored.
    fn set_phase(&self, var: usize, phase: bool);

    /// Perturbs the configuration as a deterministic function of `(rank, size)`.
    fn diversify(&self, rank: usize, size: usize) -> Result<(), SolverError>;

    /// Queues a clause learned elsewhere in the portfolio. The solver decides
    /// when (and whether) it is considered.
    fn add_learned_clause(&self, clause: &Clause);

    /// Installs the sink receiving this solver's exported clauses.
    fn set_learned_clause_callback(&self, sink: Arc<dyn LearnedClauseSink>);

    /// Requests that more learned clauses be exported.
    fn increase_clause_production(&self);
}

/// Adds every clause of `formula` through [`CoreSolver::add_clause`].
pub fn load_formula(solver: &dyn CoreSolver, formula: &Formula) {
    for c in formula.clauses() {
        // normalized clauses never fail validation
        let _ = solver.add_clause(c.lits());
    }
}
