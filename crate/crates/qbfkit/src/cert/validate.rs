//! Certificate validation by substituting the functions into the matrix.

use serde::Serialize;
use thiserror::Error;

use super::{Certificate, CertificateError, CertificateKind, Node};
use crate::formula::{canonical_digest_with, Literal, Pcnf};
use crate::sat::{SatBudget, SatResult, SatSolver};

#[derive(Clone, Copy, Debug)]
pub struct ValidateBudget {
    /// Enumerate all assignments of the free variables up to 2^bits of them.
    pub exhaustive_bits: u32,
    /// Budget for the propositional check used beyond that.
    pub sat: SatBudget,
}

impl Default for ValidateBudget {
    fn default() -> Self {
        ValidateBudget { exhaustive_bits: 16, sat: SatBudget::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMethod {
    Exhaustive,
    Sat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub valid: bool,
    pub method: ValidationMethod,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidateError {
    #[error("certificate was made for a different formula")]
    DigestMismatch,
    #[error(transparent)]
    Malformed(#[from] CertificateError),
    #[error("budget exhausted before a verdict")]
    Inconclusive,
}

/// Skolem certificates must make the matrix true for every universal
/// assignment; Herbrand certificates must make it false for every existential
/// assignment.
pub fn validate_certificate(c: &Certificate, f: &Pcnf, budget: ValidateBudget) -> Result<Validation, ValidateError> {
    if canonical_digest_with(f, c.digest.algorithm) != c.digest {
        return Err(ValidateError::DigestMismatch);
    }
    c.check_dependencies(f)?;
    let scope = f.scope();
    let free: Vec<u32> =
        f.prefix().vars().filter(|&v| scope.is_universal(v) != c.kind.defines_universals()).collect();
    if free.len() as u32 <= budget.exhaustive_bits.min(63) {
        Ok(Validation { valid: exhaustive(c, f, &free), method: ValidationMethod::Exhaustive })
    } else {
        by_sat(c, f, budget.sat).map(|valid| Validation { valid, method: ValidationMethod::Sat })
    }
}

fn exhaustive(c: &Certificate, f: &Pcnf, free: &[u32]) -> bool {
    let mut slot = vec![usize::MAX; f.max_var() as usize + 1];
    for (i, &v) in free.iter().enumerate() {
        slot[v as usize] = i;
    }
    let total: u64 = 1 << free.len();
    let mut base = 0u64;
    while base < total {
        let mask = if total - base >= 64 { u64::MAX } else { (1u64 << (total - base)) - 1 };
        // bit j of the pattern is assignment number base + j
        let patterns: Vec<u64> = (0..free.len())
            .map(|i| (0..64).filter(|j| ((base + j) >> i) & 1 == 1).fold(0, |acc, j| acc | 1 << j))
            .collect();
        let pattern = |v: u32| slot.get(v as usize).and_then(|&i| patterns.get(i)).copied().unwrap_or(0);
        let val = c.graph.eval64(pattern);
        let mut values = vec![0u64; f.max_var() as usize + 1];
        for (v, x) in values.iter_mut().enumerate() {
            *x = match c.functions.get(&(v as u32)) {
                Some(&r) => val[r as usize],
                None => pattern(v as u32),
            };
        }
        let value_of = |v: u32| values[v as usize];
        let mut all = mask;
        for cl in f.clauses() {
            let sat = cl.lits().iter().fold(0u64, |acc, l| acc | if l.is_positive() { value_of(l.var()) } else { !value_of(l.var()) });
            all &= sat;
        }
        let ok = match c.kind {
            CertificateKind::Skolem => all & mask == mask,
            CertificateKind::Herbrand => all & mask == 0,
        };
        if !ok {
            return false;
        }
        base += 64;
    }
    true
}

fn by_sat(c: &Certificate, f: &Pcnf, budget: SatBudget) -> Result<bool, ValidateError> {
    let lit = |v: u32, pos: bool| Literal::new(v, pos);
    let base = f.max_var() + 1;
    let node_var = |i: u32| base + i;
    let mut s = SatSolver::new(base + c.graph.len() as u32);
    for (i, n) in c.graph.nodes().iter().enumerate() {
        let x = node_var(i as u32);
        match *n {
            Node::False => s.add_clause(&[lit(x, false)]),
            Node::Input(v) => {
                s.add_clause(&[lit(x, false), lit(v, true)]);
                s.add_clause(&[lit(x, true), lit(v, false)]);
            }
            Node::Not(a) => {
                let a = node_var(a);
                s.add_clause(&[lit(x, false), lit(a, false)]);
                s.add_clause(&[lit(x, true), lit(a, true)]);
            }
            Node::And(a, b) => {
                let (a, b) = (node_var(a), node_var(b));
                s.add_clause(&[lit(x, false), lit(a, true)]);
                s.add_clause(&[lit(x, false), lit(b, true)]);
                s.add_clause(&[lit(x, true), lit(a, false), lit(b, false)]);
            }
        }
    }
    for (&v, &r) in &c.functions {
        let x = node_var(r);
        s.add_clause(&[lit(v, false), lit(x, true)]);
        s.add_clause(&[lit(v, true), lit(x, false)]);
    }
    match c.kind {
        CertificateKind::Herbrand => {
            for cl in f.clauses() {
                s.add_clause(cl.lits());
            }
        }
        CertificateKind::Skolem => {
            // satisfiable iff some universal assignment falsifies a clause
            let first = base + c.graph.len() as u32;
            let mut any = Vec::new();
            for (d, cl) in (first..).zip(f.clauses().iter().filter(|cl| !cl.is_tautology())) {
                for &l in cl.lits() {
                    s.add_clause(&[lit(d, false), !l]);
                }
                any.push(lit(d, true));
            }
            s.add_clause(&any);
        }
    }
    match s.solve(budget) {
        SatResult::Sat(_) => Ok(false),
        SatResult::Unsat => Ok(true),
        SatResult::Unknown => Err(ValidateError::Inconclusive),
    }
}
