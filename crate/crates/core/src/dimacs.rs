//! DIMACS CNF input, model verification and competition-format output.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::types::{evaluate_clause, normalize_clause, Assignment, ClauseState, Formula, Lit, Normalized, Status};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: clause data before the `p cnf` header")]
    MissingHeader { line: usize },
    #[error("no `p cnf` header")]
    NoHeader,
    #[error("line {line}: second `p cnf` header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: malformed header `{text}`")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: `{token}` is not an integer")]
    BadToken { line: usize, token: String },
    #[error("input ends inside a clause")]
    Unterminated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimacsDocument {
    pub declared_vars: usize,
    pub declared_clauses: usize,
    pub formula: Formula,
    pub comments: Vec<String>,
    pub tautologies: usize,
    pub warnings: Vec<String>,
}

fn parse_header(line: usize, text: &str) -> Result<(usize, usize), ParseError> {
    let bad = || ParseError::MalformedHeader {
        line,
        text: text.to_string(),
    };
    let mut it = text.split_whitespace();
    if it.next() != Some("p") || it.next() != Some("cnf") {
        return Err(bad());
    }
    let vars = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    let clauses = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    if it.next().is_some() {
        return Err(bad());
    }
    Ok((vars, clauses))
}

/// Reads a DIMACS CNF document. Clauses may span lines; a `%` line ends the data.
pub fn parse<R: BufRead>(reader: R) -> Result<DimacsDocument, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut formula = Formula::new(0);
    let mut comments = Vec::new();
    let mut warnings = Vec::new();
    let mut tautologies = 0;
    let mut parsed = 0usize;
    let mut current: Vec<Lit> = Vec::new();
    let mut max_var = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('c') {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                comments.push(rest.trim_start().to_string());
                continue;
            }
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::DuplicateHeader { line: line_no });
            }
            let (v, c) = parse_header(line_no, trimmed)?;
            header = Some((v, c));
            formula = Formula::new(v);
            continue;
        }
        if header.is_none() {
            return Err(ParseError::MissingHeader { line: line_no });
        }
        for tok in trimmed.split_whitespace() {
            let lit: Lit = tok.parse().map_err(|_| ParseError::BadToken {
                line: line_no,
                token: tok.to_string(),
            })?;
            if lit == i32::MIN {
                return Err(ParseError::BadToken {
                    line: line_no,
                    token: tok.to_string(),
                });
            }
            if lit != 0 {
                max_var = max_var.max(lit.unsigned_abs() as usize);
                current.push(lit);
                continue;
            }
            parsed += 1;
            match normalize_clause(&current).expect("no zero literal inside a clause") {
                Normalized::Clause(c) => formula.push(c),
                Normalized::Tautology => tautologies += 1,
            }
            current.clear();
        }
    }
    let (declared_vars, declared_clauses) = header.ok_or(ParseError::NoHeader)?;
    if !current.is_empty() {
        return Err(ParseError::Unterminated);
    }
    if max_var > declared_vars {
        warnings.push(format!(
            "variable {max_var} exceeds the declared {declared_vars}; variable count raised"
        ));
    }
    if parsed != declared_clauses {
        warnings.push(format!("header declares {declared_clauses} clauses, found {parsed}"));
    }
    Ok(DimacsDocument {
        declared_vars,
        declared_clauses,
        formula,
        comments,
        tautologies,
        warnings,
    })
}

pub fn parse_str(text: &str) -> Result<DimacsDocument, ParseError> {
    parse(text.as_bytes())
}

pub fn emit<W: Write>(formula: &Formula, mut w: W) -> io::Result<()> {
    writeln!(w, "p cnf {} {}", formula.num_vars(), formula.len())?;
    let mut line = String::new();
    for c in formula.clauses() {
        line.clear();
        for l in c.lits() {
            let _ = write!(line, "{l} ");
        }
        line.push('0');
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn to_dimacs_string(formula: &Formula) -> String {
    let mut out = Vec::new();
    emit(formula, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

/// True iff `model` satisfies every clause. Variables outside the model's
/// domain count as unsatisfied.
pub fn verify_model(formula: &Formula, model: &Assignment) -> bool {
    formula
        .clauses()
        .iter()
        .all(|c| matches!(evaluate_clause(c, model), Ok(ClauseState::Satisfied)))
}

const VALUES_PER_LINE: usize = 16;

/// The `s` line and, for SAT, the zero-terminated `v` lines.
pub fn format_result(status: Status, model: Option<&Assignment>) -> Vec<String> {
    let mut out = vec![match status {
        Status::Sat => "s SATISFIABLE".to_string(),
        Status::Unsat => "s UNSATISFIABLE".to_string(),
        Status::Unknown => "s UNKNOWN".to_string(),
    }];
    if let (Status::Sat, Some(m)) = (status, model) {
        let mut values: Vec<String> = m.to_lits().iter().map(|l| l.to_string()).collect();
        values.push("0".into());
        for chunk in values.chunks(VALUES_PER_LINE) {
            out.push(format!("v {}", chunk.join(" ")));
        }
    }
    out
}

/// Competition exit codes: 10 SAT, 20 UNSAT, 0 unknown.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Sat => 10,
        Status::Unsat => 20,
        Status::Unknown => 0,
    }
}
