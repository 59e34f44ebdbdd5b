//! Formula families used by tests, benchmarks and the scaling harness.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::{Clause, Formula, Lit};

/// Uniform random k-SAT: each clause picks `k` distinct variables and random signs.
pub fn random_ksat(num_vars: usize, num_clauses: usize, k: usize, seed: u64) -> Formula {
    assert!(k <= num_vars, "k-SAT needs at least k variables");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Formula::new(num_vars);
    for _ in 0..num_clauses {
        let lits: Vec<Lit> = sample(&mut rng, num_vars, k)
            .into_iter()
            .map(|v| {
                let v = v as Lit + 1;
                if rng.gen() {
                    v
                } else {
                    -v
                }
            })
            .collect();
        f.push(Clause::from_normalized(lits));
    }
    f
}

/// Random 3-SAT at clause/variable ratio 4.25.
pub fn random_3sat_threshold(num_vars: usize, seed: u64) -> Formula {
    let clauses = (num_vars as f64 * 4.25).round() as usize;
    random_ksat(num_vars, clauses, 3, seed)
}

/// Pigeonhole principle: `pigeons` pigeons into `holes` holes. UNSAT iff pigeons > holes.
pub fn pigeonhole(pigeons: usize, holes: usize) -> Formula {
    let var = |p: usize, h: usize| (p * holes + h + 1) as Lit;
    let mut f = Formula::new(pigeons * holes);
    for p in 0..pigeons {
        f.push(Clause::from_normalized((0..holes).map(|h| var(p, h)).collect()));
    }
    for h in 0..holes {
        for p in 0..pigeons {
            for q in p + 1..pigeons {
                f.push(Clause::from_normalized(vec![-var(p, h), -var(q, h)]));
            }
        }
    }
    f
}

/// `x1`, `x_i -> x_{i+1}` for `i < n`, and optionally `¬x_n` to close the chain into a contradiction.
pub fn unit_chain(n: usize, contradictory: bool) -> Formula {
    let mut f = Formula::new(n);
    f.push(Clause::from_normalized(vec![1]));
    for i in 1..n as Lit {
        f.push(Clause::from_normalized(vec![-i, i + 1]));
    }
    if contradictory {
        f.push(Clause::from_normalized(vec![-(n as Lit)]));
    }
    f
}

/// Edges of a random simple `degree`-regular graph on `n` vertices
/// (configuration model, rejecting loops and parallel edges).
///
/// Panics if `n * degree` is odd or `degree >= n`.
pub fn random_regular_graph(n: usize, degree: usize, seed: u64) -> Vec<(usize, usize)> {
    assert!(n * degree % 2 == 0 && degree < n, "no {degree}-regular graph on {n} vertices");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'retry: loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(degree)).collect();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        while !stubs.is_empty() {
            let a = stubs.swap_remove(rng.gen_range(0..stubs.len()));
            let b = stubs.swap_remove(rng.gen_range(0..stubs.len()));
            let e = (a.min(b), a.max(b));
            if a == b || edges.contains(&e) {
                continue 'retry;
            }
            edges.push(e);
        }
        return edges;
    }
}

/// Parity formula over the edges of a random regular graph, one variable per
/// edge. Vertex 0 demands odd parity of its edges and every other vertex even
/// parity, so the formula is unsatisfiable whenever the graph is connected.
pub fn tseitin(n: usize, degree: usize, seed: u64) -> Formula {
    let edges = random_regular_graph(n, degree, seed);
    let mut f = Formula::new(edges.len());
    for v in 0..n {
        let incident: Vec<Lit> = (1..)
            .zip(&edges)
            .filter(|(_, &(a, b))| a == v || b == v)
            .map(|(i, _)| i)
            .collect();
        let charge = u32::from(v == 0);
        for mask in 0u32..1 << incident.len() {
            if mask.count_ones() % 2 != charge {
                let lits = incident
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| if mask >> k & 1 == 1 { -x } else { x })
                    .collect();
                f.push(Clause::from_normalized(lits));
            }
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let f = random_3sat_threshold(20, 1);
        assert_eq!(f.len(), 85);
        assert!(f.clauses().iter().all(|c| c.len() == 3));
        assert_eq!(f, random_3sat_threshold(20, 1));
        let php = pigeonhole(4, 3);
        assert_eq!(php.num_vars(), 12);
        assert_eq!(php.len(), 4 + 3 * 6);
        assert_eq!(unit_chain(5, true).len(), 6);
    }

    #[test]
    fn regular_graphs_and_parity() {
        let edges = random_regular_graph(10, 3, 7);
        assert_eq!(edges.len(), 15);
        for v in 0..10 {
            assert_eq!(edges.iter().filter(|&&(a, b)| a == v || b == v).count(), 3);
        }
        let f = tseitin(8, 3, 2);
        assert_eq!(f.num_vars(), 12);
        assert_eq!(f.len(), 8 * 4);
        assert_eq!(f, tseitin(8, 3, 2));
    }
}
