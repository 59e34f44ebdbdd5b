//! Permutation-invariant clause hashing and a lock-free Bloom filter.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use crate::types::Lit;

/// Hash family primes; all prime and at least 2^30.
pub const PRIMES: [u64; 16] = [
    2148483661, 2150483759, 2153483833, 2157483863, 2162483923, 2168483951, 2175483977,
    2183484007, 2192484103, 2202484159, 2213484193, 2225484259, 2238484319, 2252484389,
    2267484437, 2283484499,
];

pub const DEFAULT_BLOOM_BITS: usize = 1 << 20;
pub const DEFAULT_BLOOM_HASHES: usize = 4;

/// `H_i(C)`: XOR over the literals of `lit * PRIMES[|lit * i| mod 16]`, in
/// wrapping 64-bit signed arithmetic. `i` must be at least 1.
pub fn hash_clause(lits: &[Lit], i: u64) -> u64 {
    debug_assert!(i >= 1);
    let i = i as i64;
    lits.iter().fold(0u64, |h, &lit| {
        let l = lit as i64;
        let idx = (l.wrapping_mul(i).unsigned_abs() % PRIMES.len() as u64) as usize;
        h ^ (l.wrapping_mul(PRIMES[idx] as i64) as u64)
    })
}

/// Bloom filter over clauses, using `H_1..H_k` reduced modulo the bit count.
///
/// Bits live in atomic words so inserts and queries from several threads
/// never block. `insert_query` reports presence from the pre-insertion bits.
pub struct ClauseBloomFilter {
    words: Box<[AtomicU64]>,
    mask: u64,
    hashes: usize,
    inserts: AtomicUsize,
}

impl Default for ClauseBloomFilter {
    fn default() -> Self {
        Self::new(DEFAULT_BLOOM_BITS, DEFAULT_BLOOM_HASHES)
    }
}

impl ClauseBloomFilter {
    /// `bits` must be a power of two, at least 64.
    pub fn new(bits: usize, hashes: usize) -> Self {
        assert!(bits.is_power_of_two() && bits >= 64, "bit count must be a power of two >= 64");
        assert!(hashes >= 1);
        ClauseBloomFilter {
            words: (0..bits / 64).map(|_| AtomicU64::new(0)).collect(),
            mask: bits as u64 - 1,
            hashes,
            inserts: AtomicUsize::new(0),
        }
    }

    pub fn bits(&self) -> usize {
        self.words.len() * 64
    }

    pub fn hashes(&self) -> usize {
        self.hashes
    }

    /// Insertions since the last clear.
    pub fn insert_count(&self) -> usize {
        self.inserts.load(Ordering::Relaxed)
    }

    #[inline]
    fn position(&self, lits: &[Lit], i: u64) -> (usize, u64) {
        let bit = hash_clause(lits, i) & self.mask;
        ((bit >> 6) as usize, 1u64 << (bit & 63))
    }

    /// Inserts the clause and returns whether it was (probably) present before.
    pub fn insert_query(&self, lits: &[Lit]) -> bool {
        let mut present = true;
        for i in 1..=self.hashes as u64 {
            let (word, bit) = self.position(lits, i);
            let prev = self.words[word].fetch_or(bit, Ordering::AcqRel);
            present &= prev & bit != 0;
        }
        if !present {
            self.inserts.fetch_add(1, Ordering::Relaxed);
        }
        present
    }

    pub fn contains(&self, lits: &[Lit]) -> bool {
        (1..=self.hashes as u64).all(|i| {
            let (word, bit) = self.position(lits, i);
            self.words[word].load(Ordering::Acquire) & bit != 0
        })
    }

    pub fn clear(&self) {
        for w in self.words.iter() {
            w.store(0, Ordering::Release);
        }
        self.inserts.store(0, Ordering::Relaxed);
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| w.load(Ordering::Relaxed) == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_clause_hashes_to_zero() {
        for i in 1..10 {
            assert_eq!(hash_clause(&[], i), 0);
        }
    }

    #[test]
    fn hash_regression_value() {
        // 1 * P[1] xor (-2) * P[2], with -2 * P[2] wrapped to 64 bits
        let expected = 2150483759u64 ^ (-2i64 * 2153483833i64) as u64;
        assert_eq!(hash_clause(&[1, -2], 1), expected);
        assert_eq!(hash_clause(&[1, -2], 1), 18446744067256951969);
        assert_eq!(hash_clause(&[-2, 1], 1), hash_clause(&[1, -2], 1));
        // i = 3 selects PRIMES[3] and PRIMES[6]
        let expected = 2157483863u64 ^ (-2i64 * 2175483977i64) as u64;
        assert_eq!(hash_clause(&[1, -2], 3), expected);
    }

    #[test]
    fn insert_then_present() {
        let f = ClauseBloomFilter::default();
        assert!(!f.insert_query(&[1, 2, 3]));
        assert!(f.insert_query(&[1, 2, 3]));
        assert!(f.insert_query(&[3, 1, 2]));
        assert!(f.contains(&[2, 3, 1]));
        assert_eq!(f.insert_count(), 1);
        f.clear();
        assert!(f.is_empty());
        assert!(!f.contains(&[1, 2, 3]));
    }
}
