//! Independent solving of many formulas, one bare core solver each.

use crate::cdcl::{CdclSolver, SearchConfig};
use crate::par::*;
use crate::solver::{load_formula, CoreSolver};
use crate::types::{Formula, SatResult};

pub fn solve_one(formula: &Formula, config: SearchConfig) -> SatResult {
    let s = CdclSolver::with_config(config);
    load_formula(&s, formula);
    s.solve()
}

/// Results in input order, computed on the thread pool.
pub fn solve_batch(formulas: &[Formula], config: SearchConfig) -> Vec<SatResult> {
    formulas.par_iter().map(|f| solve_one(f, config)).collect()
}

pub fn solve_batch_seq(formulas: &[Formula], config: SearchConfig) -> Vec<SatResult> {
    formulas.iter().map(|f| solve_one(f, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimacs::verify_model;
    use crate::generators::random_3sat_threshold;
    use crate::oracle;

    #[test]
    fn batch_matches_oracle_and_sequential() {
        let fs: Vec<Formula> = (0..24).map(|s| random_3sat_threshold(16, s)).collect();
        let par = solve_batch(&fs, SearchConfig::default());
        assert_eq!(par, solve_batch_seq(&fs, SearchConfig::default()));
        for (f, r) in fs.iter().zip(&par) {
            assert_eq!(r.status(), oracle::status(f).unwrap());
            if let Some(m) = r.model() {
                assert!(verify_model(f, m));
            }
        }
    }
}
