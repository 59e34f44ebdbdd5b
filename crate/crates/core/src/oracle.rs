//! Exhaustive-enumeration reference solver for small formulas.
//!
//! Shares no code with the CDCL core. Assignments are bit vectors over at most
//! [`MAX_ORACLE_VARS`] variables; the search space is cut into fixed blocks
//! that are scanned in parallel when the `parallel` feature is on.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::types::{var_of, Assignment, Clause, Formula, Lit, Status};

pub const MAX_ORACLE_VARS: usize = 30;
const BLOCK_BITS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} variables exceed the enumeration limit of {MAX_ORACLE_VARS}")]
    TooManyVars(usize),
}

// Lanes of a 64-assignment word: bit `j` of variable `b < 6` is bit `b` of `j`.
const LANE_PATTERNS: [u64; 6] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];
const LOW_BITS: u32 = 6;

#[derive(Clone, Copy)]
struct Masks {
    // lanes satisfied by the clause's literals on the low variables
    low: u64,
    pos_high: u32,
    neg_high: u32,
}

struct Compiled {
    num_vars: usize,
    clauses: Vec<Masks>,
    has_empty: bool,
}

impl Compiled {
    fn new(f: &Formula) -> Result<Self, OracleError> {
        if f.num_vars() > MAX_ORACLE_VARS {
            return Err(OracleError::TooManyVars(f.num_vars()));
        }
        let mut has_empty = false;
        let clauses = f
            .clauses()
            .iter()
            .map(|c| {
                has_empty |= c.is_empty();
                c.lits().iter().fold(
                    Masks {
                        low: 0,
                        pos_high: 0,
                        neg_high: 0,
                    },
                    |mut m, &l| {
                        let b = var_of(l) as u32 - 1;
                        if b < LOW_BITS {
                            let pat = LANE_PATTERNS[b as usize];
                            m.low |= if l > 0 { pat } else { !pat };
                        } else if l > 0 {
                            m.pos_high |= 1 << b;
                        } else {
                            m.neg_high |= 1 << b;
                        }
                        m
                    },
                )
            })
            .collect();
        Ok(Compiled {
            num_vars: f.num_vars(),
            clauses,
            has_empty,
        })
    }

    /// Lanes of the word starting at assignment `base` that satisfy every clause.
    #[inline]
    fn satisfied_lanes(&self, base: u32) -> u64 {
        let mut acc = if self.num_vars < LOW_BITS as usize {
            (1u64 << (1u32 << self.num_vars)) - 1
        } else {
            !0
        };
        for m in &self.clauses {
            if (base & m.pos_high) | (!base & m.neg_high) == 0 {
                acc &= m.low;
                if acc == 0 {
                    break;
                }
            }
        }
        acc
    }

    /// `(number of blocks, words per block)`.
    fn blocks(&self) -> (u64, u64) {
        let words = 1u64 << self.num_vars.saturating_sub(LOW_BITS as usize);
        let per_block = 1u64 << BLOCK_BITS.min(self.num_vars.saturating_sub(LOW_BITS as usize) as u32);
        (words / per_block, per_block)
    }

    fn scan_block(&self, index: u64, per_block: u64) -> Option<u32> {
        let start = index * per_block;
        (start..start + per_block).find_map(|w| {
            let base = (w << LOW_BITS) as u32;
            let lanes = self.satisfied_lanes(base);
            (lanes != 0).then(|| base | lanes.trailing_zeros())
        })
    }

    fn to_assignment(&self, bits: u32) -> Assignment {
        let bools: Vec<bool> = (0..self.num_vars).map(|v| bits >> v & 1 == 1).collect();
        Assignment::from_bools(&bools)
    }
}

/// Smallest satisfying assignment (as a bit vector, lowest variable first), scanning sequentially.
pub fn brute_force_seq(f: &Formula) -> Result<Option<Assignment>, OracleError> {
    let c = Compiled::new(f)?;
    if c.has_empty {
        return Ok(None);
    }
    let (n, block) = c.blocks();
    Ok((0..n)
        .find_map(|i| c.scan_block(i, block))
        .map(|bits| c.to_assignment(bits)))
}

/// Same answer as [`brute_force_seq`], with blocks scanned on the Rayon pool.
#[cfg(feature = "parallel")]
pub fn brute_force_par(f: &Formula) -> Result<Option<Assignment>, OracleError> {
    use rayon::prelude::*;
    let c = Compiled::new(f)?;
    if c.has_empty {
        return Ok(None);
    }
    let (n, block) = c.blocks();
    Ok((0..n)
        .into_par_iter()
        .find_map_first(|i| c.scan_block(i, block))
        .map(|bits| c.to_assignment(bits)))
}

#[cfg(not(feature = "parallel"))]
pub fn brute_force_par(f: &Formula) -> Result<Option<Assignment>, OracleError> {
    brute_force_seq(f)
}

/// Satisfying assignment if one exists.
pub fn brute_force(f: &Formula) -> Result<Option<Assignment>, OracleError> {
    brute_force_par(f)
}

pub fn status(f: &Formula) -> Result<Status, OracleError> {
    Ok(match brute_force(f)? {
        Some(_) => Status::Sat,
        None => Status::Unsat,
    })
}

/// Whether `f` entails `clause`, i.e. `f ∧ ¬clause` is unsatisfiable.
///
/// The literals of `clause` are fixed to false first, so only the remaining
/// free variables are enumerated.
pub fn implies(f: &Formula, clause: &[Lit]) -> Result<bool, OracleError> {
    let fixed: HashSet<Lit> = clause.iter().copied().collect();
    if fixed.iter().any(|l| fixed.contains(&-l)) {
        return Ok(true);
    }
    let mut remap: HashMap<usize, Lit> = HashMap::new();
    let mut rest: Vec<Vec<Lit>> = Vec::new();
    for c in f.clauses() {
        if c.lits().iter().any(|l| fixed.contains(&-l)) {
            continue;
        }
        let mut lits = Vec::with_capacity(c.len());
        for &l in c.lits().iter().filter(|l| !fixed.contains(l)) {
            let next = remap.len() as Lit + 1;
            let v = *remap.entry(var_of(l)).or_insert(next);
            lits.push(if l > 0 { v } else { -v });
        }
        if lits.is_empty() {
            return Ok(true);
        }
        rest.push(lits);
    }
    let mut g = Formula::new(remap.len());
    for lits in rest {
        g.push(Clause::from_normalized(lits));
    }
    Ok(brute_force(&g)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{pigeonhole, random_3sat_threshold, unit_chain};
    use crate::types::{evaluate_clause, ClauseState};

    #[test]
    fn small_cases() {
        assert_eq!(status(&Formula::new(0)).unwrap(), Status::Sat);
        assert_eq!(status(&pigeonhole(4, 3)).unwrap(), Status::Unsat);
        assert_eq!(status(&pigeonhole(3, 3)).unwrap(), Status::Sat);
        assert_eq!(status(&unit_chain(10, true)).unwrap(), Status::Unsat);
        assert_eq!(status(&unit_chain(10, false)).unwrap(), Status::Sat);
        let mut f = Formula::new(2);
        f.push(Clause::empty());
        assert_eq!(status(&f).unwrap(), Status::Unsat);
        assert!(matches!(status(&Formula::new(31)), Err(OracleError::TooManyVars(31))));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        for seed in 0..20 {
            let f = random_3sat_threshold(16, seed);
            let a = brute_force_seq(&f).unwrap();
            assert_eq!(a, brute_force_par(&f).unwrap());
            if let Some(m) = a {
                for c in f.clauses() {
                    assert_eq!(evaluate_clause(c, &m).unwrap(), ClauseState::Satisfied);
                }
            }
        }
    }

    #[test]
    fn matches_scalar_evaluation_below_word_size() {
        for n in 1..9 {
            for seed in 0..30 {
                let f = crate::generators::random_ksat(n, 2 * n, 2.min(n), seed);
                let first = (0u32..1 << n).find(|&bits| {
                    let bools: Vec<bool> = (0..n).map(|v| bits >> v & 1 == 1).collect();
                    crate::dimacs::verify_model(&f, &Assignment::from_bools(&bools))
                });
                let got = brute_force_seq(&f).unwrap();
                assert_eq!(got.is_some(), first.is_some());
                if let (Some(m), Some(bits)) = (got, first) {
                    let want: Vec<bool> = (0..n).map(|v| bits >> v & 1 == 1).collect();
                    assert_eq!(m, Assignment::from_bools(&want));
                }
            }
        }
    }

    #[test]
    fn implication() {
        let f = Formula::from_raw(3, [vec![1, 2], vec![-2, 3]]).unwrap();
        assert!(implies(&f, &[1, 3]).unwrap());
        assert!(!implies(&f, &[1]).unwrap());
        assert!(implies(&f, &[1, 2, 3]).unwrap());
        assert!(implies(&f, &[2, -2]).unwrap());
        assert!(!implies(&Formula::new(0), &[4]).unwrap());
        let php = pigeonhole(5, 4);
        assert!(implies(&php, &[]).unwrap());
        for seed in 0..10 {
            let g = random_3sat_threshold(14, seed);
            for c in [[1, 2, 3], [-4, 5, -6], [7, -8, 9]] {
                let mut h = g.clone();
                for &l in &c {
                    h.push(Clause::from_normalized(vec![-l]));
                }
                assert_eq!(implies(&g, &c).unwrap(), brute_force(&h).unwrap().is_none());
            }
        }
    }
}
