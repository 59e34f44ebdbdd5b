//! Search parameters and the per-rank variation table used by `diversify`.

/// Tunable search parameters of the built-in core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Conflicts per Luby unit.
    pub restart_base: u64,
    /// Multiplicative VSIDS decay.
    pub var_decay: f64,
    /// Probability of a uniformly random decision variable.
    pub random_decision_prob: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        VARIATIONS[0].with_seed(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variation {
    pub restart_base: u64,
    pub var_decay: f64,
    pub random_decision_prob: f64,
}

impl Variation {
    const fn new(restart_base: u64, var_decay: f64, random_decision_prob: f64) -> Self {
        Variation {
            restart_base,
            var_decay,
            random_decision_prob,
        }
    }

    pub fn with_seed(self, seed: u64) -> SearchConfig {
        SearchConfig {
            restart_base: self.restart_base,
            var_decay: self.var_decay,
            random_decision_prob: self.random_decision_prob,
            seed,
        }
    }
}

/// Indexed by `rank % 8`. Row 0 is the baseline configuration.
pub const VARIATIONS: [Variation; 8] = [
    Variation::new(64, 0.95, 0.0),
    Variation::new(256, 0.95, 0.0),
    Variation::new(1024, 0.95, 0.0),
    Variation::new(64, 0.85, 0.0),
    Variation::new(64, 0.95, 0.02),
    Variation::new(256, 0.85, 0.02),
    Variation::new(1024, 0.85, 0.0),
    Variation::new(256, 0.95, 0.02),
];

/// Configuration for portfolio member `rank`: its table row plus RNG seed = rank.
pub fn config_for_rank(rank: usize) -> SearchConfig {
    VARIATIONS[rank % VARIATIONS.len()].with_seed(rank as u64)
}

/// Export length limit bounds.
pub const EXPORT_LIMIT_INITIAL: usize = 3;
pub const EXPORT_LIMIT_CAP: usize = 30;

/// Learned clauses with glue at or below this are never deleted.
pub const PERMANENT_GLUE: u32 = 3;

/// `i`-th element (0-based) of the Luby sequence 1,1,2,1,1,2,4,...
pub fn luby(i: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luby_prefix() {
        let got: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(got, [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn rank_table() {
        assert_eq!(config_for_rank(0), SearchConfig::default());
        let c = config_for_rank(3);
        assert_eq!(c.seed, 3);
        assert_eq!(c.restart_base, VARIATIONS[3].restart_base);
        assert_eq!(c.var_decay, VARIATIONS[3].var_decay);
        assert_eq!(config_for_rank(11).restart_base, VARIATIONS[3].restart_base);
    }
}
