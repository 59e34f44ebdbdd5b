//! Literals, clauses, formulas, assignments and solver outcomes.
//!
//! Literals are plain DIMACS integers: `j` is the variable `x_j`, `-j` its
//! negation. Clauses keep that representation so they can be copied into
//! exchange buffers without translation.

use std::fmt;

use thiserror::Error;

/// A DIMACS literal. Never zero.
pub type Lit = i32;

/// Variable index of a literal (`|lit|`).
#[inline]
pub fn var_of(lit: Lit) -> usize {
    lit.unsigned_abs() as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypesError {
    #[error("clause contains the literal 0")]
    ZeroLiteral,
    #[error("variable {var} is outside the assignment domain 1..={num_vars}")]
    OutOfDomain { var: usize, num_vars: usize },
}

/// A normalized clause: no repeated literal, no complementary pair.
///
/// Construct through [`normalize_clause`] or [`Clause::from_normalized`];
/// everything past the ingestion boundary assumes the invariant holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Clause(Vec<Lit>);

/// Result of normalizing a raw integer list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Clause(Clause),
    /// Contains both `j` and `-j`; the caller drops it.
    Tautology,
}

/// Drops repeated literals and detects tautologies. First occurrence order is kept.
pub fn normalize_clause(raw: &[Lit]) -> Result<Normalized, TypesError> {
    if raw.contains(&0) {
        return Err(TypesError::ZeroLiteral);
    }
    let mut out: Vec<Lit> = Vec::with_capacity(raw.len());
    for &lit in raw {
        // clauses are short; a linear scan beats hashing here
        if out.contains(&-lit) {
            return Ok(Normalized::Tautology);
        }
        if !out.contains(&lit) {
            out.push(lit);
        }
    }
    Ok(Normalized::Clause(Clause(out)))
}

impl Clause {
    /// Wraps literals already known to be normalized (nonzero, no duplicate
    /// variables). Checked with a debug assertion only.
    pub fn from_normalized(lits: Vec<Lit>) -> Self {
        debug_assert!(lits.iter().all(|&l| l != 0));
        debug_assert!(lits
            .iter()
            .enumerate()
            .all(|(i, &l)| lits[..i].iter().all(|&m| var_of(m) != var_of(l))));
        Clause(lits)
    }

    pub fn empty() -> Self {
        Clause(Vec::new())
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<Lit> {
        self.0
    }

    pub fn max_var(&self) -> usize {
        self.0.iter().map(|&l| var_of(l)).max().unwrap_or(0)
    }

    /// Literals in ascending order; identical for any permutation of the clause.
    pub fn sorted_key(&self) -> Vec<Lit> {
        let mut key = self.0.clone();
        key.sort_unstable();
        key
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for lit in &self.0 {
            write!(f, "{lit} ")?;
        }
        write!(f, "0")
    }
}

/// A CNF formula over variables `1..=num_vars`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(num_vars: usize) -> Self {
        Formula {
            num_vars,
            clauses: Vec::new(),
        }
    }

    /// Builds a formula from raw integer clauses, dropping tautologies. The
    /// variable count is raised to cover every literal.
    pub fn from_raw<I, C>(num_vars: usize, clauses: I) -> Result<Self, TypesError>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[Lit]>,
    {
        let mut f = Formula::new(num_vars);
        for raw in clauses {
            if let Normalized::Clause(c) = normalize_clause(raw.as_ref())? {
                f.push(c);
            }
        }
        Ok(f)
    }

    /// Appends a clause, growing `num_vars` if the clause mentions a larger variable.
    pub fn push(&mut self, clause: Clause) {
        self.num_vars = self.num_vars.max(clause.max_var());
        self.clauses.push(clause);
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

/// Three-valued truth value of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Value {
    True,
    False,
    #[default]
    Unassigned,
}

impl Value {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Value::True
        } else {
            Value::False
        }
    }
}

/// Map from variables `1..=num_vars` to [`Value`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    // index 0 unused
    values: Vec<Value>,
}

impl Assignment {
    pub fn unassigned(num_vars: usize) -> Self {
        Assignment {
            values: vec![Value::Unassigned; num_vars + 1],
        }
    }

    /// From a vector of booleans where `bools[i]` is the value of variable `i + 1`.
    pub fn from_bools(bools: &[bool]) -> Self {
        let mut values = Vec::with_capacity(bools.len() + 1);
        values.push(Value::Unassigned);
        values.extend(bools.iter().map(|&b| Value::from_bool(b)));
        Assignment { values }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, var: usize) -> Result<Value, TypesError> {
        if var == 0 || var > self.num_vars() {
            return Err(TypesError::OutOfDomain {
                var,
                num_vars: self.num_vars(),
            });
        }
        Ok(self.values[var])
    }

    pub fn set(&mut self, var: usize, value: Value) -> Result<(), TypesError> {
        self.get(var)?;
        self.values[var] = value;
        Ok(())
    }

    /// Value of a literal under this assignment.
    pub fn lit_value(&self, lit: Lit) -> Result<Value, TypesError> {
        Ok(match self.get(var_of(lit))? {
            Value::Unassigned => Value::Unassigned,
            v => Value::from_bool((v == Value::True) == (lit > 0)),
        })
    }

    /// Extends (or truncates) the domain to `num_vars`; new variables are false.
    pub fn resized(mut self, num_vars: usize) -> Self {
        self.values.resize(num_vars + 1, Value::False);
        self
    }

    /// Signed-literal rendering of the assigned variables (unassigned ones are skipped).
    pub fn to_lits(&self) -> Vec<Lit> {
        (1..=self.num_vars())
            .filter_map(|v| match self.values[v] {
                Value::True => Some(v as Lit),
                Value::False => Some(-(v as Lit)),
                Value::Unassigned => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseState {
    Satisfied,
    Falsified,
    Undetermined,
}

pub fn evaluate_clause(clause: &Clause, a: &Assignment) -> Result<ClauseState, TypesError> {
    let mut undetermined = false;
    for &lit in clause.lits() {
        match a.lit_value(lit)? {
            Value::True => return Ok(ClauseState::Satisfied),
            Value::Unassigned => undetermined = true,
            Value::False => {}
        }
    }
    Ok(if undetermined {
        ClauseState::Undetermined
    } else {
        ClauseState::Falsified
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

/// Outcome of a solve call. A model is present exactly when the answer is SAT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
    Unknown,
}

impl SatResult {
    pub fn status(&self) -> Status {
        match self {
            SatResult::Sat(_) => Status::Sat,
            SatResult::Unsat => Status::Unsat,
            SatResult::Unknown => Status::Unknown,
        }
    }

    pub fn model(&self) -> Option<&Assignment> {
        match self {
            SatResult::Sat(m) => Some(m),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clause(lits: &[Lit]) -> Clause {
        match normalize_clause(lits).unwrap() {
            Normalized::Clause(c) => c,
            Normalized::Tautology => panic!("tautology"),
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(clause(&[1, 1, -2]).lits(), &[1, -2]);
        assert_eq!(normalize_clause(&[1, -1]).unwrap(), Normalized::Tautology);
        assert_eq!(clause(&[3, 2, -5]).lits(), &[3, 2, -5]);
        assert_eq!(normalize_clause(&[1, 0, 2]), Err(TypesError::ZeroLiteral));
        assert_eq!(normalize_clause(&[1, -1, 0]), Err(TypesError::ZeroLiteral));
        assert!(clause(&[]).is_empty());
    }

    #[test]
    fn evaluate_examples() {
        let c = clause(&[1, -2]);
        let mut a = Assignment::from_bools(&[true, true]);
        assert_eq!(evaluate_clause(&c, &a).unwrap(), ClauseState::Satisfied);
        a = Assignment::from_bools(&[false, true]);
        assert_eq!(evaluate_clause(&c, &a).unwrap(), ClauseState::Falsified);
        a.set(2, Value::Unassigned).unwrap();
        assert_eq!(evaluate_clause(&c, &a).unwrap(), ClauseState::Undetermined);
        let short = Assignment::from_bools(&[true]);
        assert_eq!(
            evaluate_clause(&clause(&[2]), &short),
            Err(TypesError::OutOfDomain { var: 2, num_vars: 1 })
        );
    }

    #[test]
    fn formula_grows_num_vars() {
        let f = Formula::from_raw(2, [vec![1, 5], vec![2, -2]]).unwrap();
        assert_eq!(f.num_vars(), 5);
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn resize_pads_with_false() {
        let a = Assignment::from_bools(&[true]).resized(3);
        assert_eq!(a.to_lits(), vec![1, -2, -3]);
        assert_eq!(a.resized(0).num_vars(), 0);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in prop::collection::vec((1i32..8, any::<bool>()), 0..12)) {
            let raw: Vec<Lit> = raw.into_iter().map(|(v, s)| if s { v } else { -v }).collect();
            match normalize_clause(&raw).unwrap() {
                Normalized::Tautology => {}
                Normalized::Clause(c) => {
                    prop_assert_eq!(normalize_clause(c.lits()).unwrap(), Normalized::Clause(c.clone()));
                }
            }
        }

        #[test]
        fn satisfied_is_monotone_under_extension(
            raw in prop::collection::vec((1i32..6, any::<bool>()), 1..6),
            base in prop::collection::vec(0u8..3, 5),
            fill in prop::collection::vec(any::<bool>(), 5),
        ) {
            let raw: Vec<Lit> = raw.into_iter().map(|(v, s)| if s { v } else { -v }).collect();
            let Normalized::Clause(c) = normalize_clause(&raw).unwrap() else { return Ok(()); };
            let mut a = Assignment::unassigned(5);
            for (i, &b) in base.iter().enumerate() {
                let v = match b { 0 => Value::True, 1 => Value::False, _ => Value::Unassigned };
                a.set(i + 1, v).unwrap();
            }
            if evaluate_clause(&c, &a).unwrap() == ClauseState::Satisfied {
                let mut ext = a.clone();
                for (i, &b) in fill.iter().enumerate() {
                    if ext.get(i + 1).unwrap() == Value::Unassigned {
                        ext.set(i + 1, Value::from_bool(b)).unwrap();
                    }
                }
                prop_assert_eq!(evaluate_clause(&c, &ext).unwrap(), ClauseState::Satisfied);
            }
        }
    }
}
