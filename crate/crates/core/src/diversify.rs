//! Phase-recommendation plans and portfolio-wide diversification.
//!
//! Every plan is a pure function of `(mode, num_vars, solver_count, seed)`, so
//! processes sharing a seed derive the same global plan without exchanging
//! messages. Variables are processed in fixed-size chunks, each with its own
//! ChaCha stream; the parallel and sequential builds therefore produce
//! identical plans.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par::*;
use crate::solver::{CoreSolver, SolverError};

pub const DEFAULT_SEED: u64 = 2015;
const CHUNK_VARS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PhaseMode {
    None,
    Random,
    Sparse,
    #[default]
    SparseRandom,
}

impl FromStr for PhaseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PhaseMode::None),
            "random" => Ok(PhaseMode::Random),
            "sparse" => Ok(PhaseMode::Sparse),
            "sparserandom" | "sparse-random" => Ok(PhaseMode::SparseRandom),
            other => Err(format!("unknown diversification mode `{other}`")),
        }
    }
}

impl fmt::Display for PhaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseMode::None => "none",
            PhaseMode::Random => "random",
            PhaseMode::Sparse => "sparse",
            PhaseMode::SparseRandom => "sparserandom",
        })
    }
}

/// Phase mode plus whether each solver's own `diversify` is called.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiversificationMode {
    pub phases: PhaseMode,
    pub native: bool,
}

impl Default for DiversificationMode {
    fn default() -> Self {
        DiversificationMode {
            phases: PhaseMode::SparseRandom,
            native: true,
        }
    }
}

/// Phase recommendations for every solver in the portfolio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePlan {
    // per solver, sorted by variable
    per_solver: Vec<Vec<(usize, bool)>>,
}

impl PhasePlan {
    pub fn solver_count(&self) -> usize {
        self.per_solver.len()
    }

    pub fn for_solver(&self, index: usize) -> &[(usize, bool)] {
        &self.per_solver[index]
    }

    pub fn recommendation(&self, solver: usize, var: usize) -> Option<bool> {
        let entries = &self.per_solver[solver];
        entries
            .binary_search_by_key(&var, |&(v, _)| v)
            .ok()
            .map(|i| entries[i].1)
    }

    pub fn total(&self) -> usize {
        self.per_solver.iter().map(Vec::len).sum()
    }
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn chunks(num_vars: usize) -> usize {
    num_vars.div_ceil(CHUNK_VARS)
}

fn chunk_range(chunk: usize, num_vars: usize) -> std::ops::Range<usize> {
    let start = chunk * CHUNK_VARS + 1;
    start..(start + CHUNK_VARS).min(num_vars + 1)
}

// Streams: independent per (mode, solver, chunk). Sparse uses one stream per
// chunk since it decides the owning solver of each variable.
fn stream_id(mode: u64, solver: usize, chunk: usize) -> u64 {
    (mode << 60) ^ ((solver as u64) << 32) ^ chunk as u64
}

/// Recommendations of one global solver index without materializing the others.
pub fn plan_for_solver(
    mode: PhaseMode,
    num_vars: usize,
    solver_count: usize,
    solver: usize,
    seed: u64,
) -> Vec<(usize, bool)> {
    assert!(solver < solver_count, "solver index out of range");
    let per_chunk: Vec<Vec<(usize, bool)>> = (0..chunks(num_vars))
        .into_par_iter()
        .map(|chunk| {
            let vars = chunk_range(chunk, num_vars);
            match mode {
                PhaseMode::None => Vec::new(),
                PhaseMode::Random => {
                    let mut rng = chunk_rng(seed, stream_id(1, solver, chunk));
                    vars.map(|v| (v, rng.gen::<bool>())).collect()
                }
                PhaseMode::SparseRandom => {
                    let mut rng = chunk_rng(seed, stream_id(3, solver, chunk));
                    let p = 1.0 / solver_count as f64;
                    vars.filter_map(|v| {
                        let pick = rng.gen_bool(p);
                        let phase = rng.gen::<bool>();
                        pick.then_some((v, phase))
                    })
                    .collect()
                }
                PhaseMode::Sparse => {
                    let mut rng = chunk_rng(seed, stream_id(2, 0, chunk));
                    vars.filter_map(|v| {
                        let owner = rng.gen_range(0..solver_count);
                        let phase = rng.gen::<bool>();
                        (owner == solver).then_some((v, phase))
                    })
                    .collect()
                }
            }
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

pub fn plan(mode: PhaseMode, num_vars: usize, solver_count: usize, seed: u64) -> PhasePlan {
    PhasePlan {
        per_solver: (0..solver_count)
            .into_par_iter()
            .map(|s| plan_for_solver(mode, num_vars, solver_count, s, seed))
            .collect(),
    }
}

/// Every (solver, variable) pair gets a random phase.
pub fn random_plan(num_vars: usize, solver_count: usize, seed: u64) -> PhasePlan {
    plan(PhaseMode::Random, num_vars, solver_count, seed)
}

/// Each variable gets a random phase on exactly one uniformly chosen solver.
pub fn sparse_plan(num_vars: usize, solver_count: usize, seed: u64) -> PhasePlan {
    plan(PhaseMode::Sparse, num_vars, solver_count, seed)
}

/// Each (solver, variable) pair independently gets a random phase with probability `1 / solver_count`.
pub fn sparse_random_plan(num_vars: usize, solver_count: usize, seed: u64) -> PhasePlan {
    plan(PhaseMode::SparseRandom, num_vars, solver_count, seed)
}

/// Diversifies the local solvers of process `global_rank`.
///
/// Local solver `i` has global index `global_rank * solvers.len() + i` out of
/// `total_count`. It receives its plan entries through `set_phase` and, when
/// native diversification is enabled, `diversify(global_index, total_count)`.
pub fn apply_diversification(
    solvers: &[Arc<dyn CoreSolver>],
    mode: DiversificationMode,
    global_rank: usize,
    total_count: usize,
    num_vars: usize,
    seed: u64,
) -> Result<(), SolverError> {
    let local = solvers.len();
    for (i, solver) in solvers.iter().enumerate() {
        let global = global_rank * local + i;
        if mode.phases != PhaseMode::None {
            for (var, phase) in plan_for_solver(mode.phases, num_vars, total_count, global, seed) {
                solver.set_phase(var, phase);
            }
        }
        if mode.native {
            solver.diversify(global, total_count)?;
        }
    }
    Ok(())
}
