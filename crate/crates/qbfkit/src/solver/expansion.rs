//! Solving by eliminating universals through expansion.
//!
//! The innermost universal `u` is removed by conjoining the matrix under
//! `u = true` with a copy under `u = false` in which every existential
//! quantified inside `u` is renamed. Once no universal is left the matrix goes
//! to the propositional engine. Exponential in general; used as the reference
//! oracle and on formulas with few universals.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::formula::{Literal, Pcnf};
use crate::sat::{SatBudget, SatResult, SatSolver};

use super::{Limits, SolveOutcome, Status, UnknownReason};

/// Literal budget applied when no memory limit is given.
const DEFAULT_MAX_LITERALS: usize = 1 << 25;

pub fn solve_expansion(f: &Pcnf, limits: Limits) -> SolveOutcome {
    let started = Instant::now();
    let deadline = limits.deadline(started);
    let max_lits = limits.memory.map_or(DEFAULT_MAX_LITERALS, |m| m / std::mem::size_of::<Literal>());
    let scope = f.scope();
    let mut level: Vec<u32> = (0..=f.max_var()).map(|v| scope.level(v)).collect();
    let mut universal: Vec<bool> = (0..=f.max_var()).map(|v| scope.is_universal(v)).collect();
    let mut universals: Vec<u32> = f.prefix().vars().filter(|&v| scope.is_universal(v)).collect();
    universals.sort_by_key(|&v| scope.level(v));

    let mut next_var = f.max_var() + 1;
    let mut clauses: BTreeSet<Vec<Literal>> = BTreeSet::new();
    for c in f.clauses() {
        let c = c.sorted();
        if !c.is_tautology() {
            clauses.insert(reduce(c.into_lits(), &level, &universal));
        }
    }

    while let Some(u) = universals.pop() {
        if clauses.contains(&Vec::new()) {
            return SolveOutcome::solved(Status::Unsat, started);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return SolveOutcome::unknown(UnknownReason::Timeout, started);
        }
        let lu = level[u as usize];
        let inner: BTreeSet<u32> = clauses
            .iter()
            .flatten()
            .map(|l| l.var())
            .filter(|&v| level[v as usize] > lu)
            .collect();
        let mut rename = vec![0u32; next_var as usize];
        for v in inner {
            rename[v as usize] = next_var;
            level.push(level[v as usize]);
            universal.push(false);
            next_var += 1;
        }
        let mut out = BTreeSet::new();
        let mut total = 0;
        for c in &clauses {
            for value in [true, false] {
                if c.iter().any(|&l| l.var() == u && l.is_positive() == value) {
                    continue;
                }
                let lits: Vec<Literal> = c
                    .iter()
                    .filter(|l| l.var() != u)
                    .map(|&l| match rename.get(l.var() as usize) {
                        Some(&r) if !value && r != 0 => Literal::new(r, l.is_positive()),
                        _ => l,
                    })
                    .collect();
                let mut lits = reduce(lits, &level, &universal);
                lits.sort_unstable();
                total += lits.len();
                out.insert(lits);
            }
            if total > max_lits {
                return SolveOutcome::unknown(UnknownReason::Memout, started);
            }
        }
        clauses = out;
    }

    let mut sat = SatSolver::new(next_var.saturating_sub(1));
    for c in &clauses {
        sat.add_clause(c);
    }
    match sat.solve(SatBudget { deadline, max_conflicts: None }) {
        SatResult::Sat(_) => SolveOutcome::solved(Status::Sat, started),
        SatResult::Unsat => SolveOutcome::solved(Status::Unsat, started),
        SatResult::Unknown => SolveOutcome::unknown(UnknownReason::Timeout, started),
    }
}

fn reduce(lits: Vec<Literal>, level: &[u32], universal: &[bool]) -> Vec<Literal> {
    let max_e = lits.iter().filter(|l| !universal[l.var() as usize]).map(|l| level[l.var() as usize]).max().unwrap_or(0);
    lits.into_iter().filter(|l| !universal[l.var() as usize] || level[l.var() as usize] < max_e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_qdimacs;

    fn solve(text: &str) -> Status {
        solve_expansion(&parse_qdimacs(text.as_bytes()).unwrap(), Limits::default()).status
    }

    #[test]
    fn small_cases() {
        assert_eq!(solve("p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n"), Status::Sat);
        assert_eq!(solve("p cnf 2 2\ne 1 0\na 2 0\n1 2 0\n-1 2 0\n"), Status::Unsat);
        assert_eq!(solve("p cnf 0 0\n"), Status::Sat);
        assert_eq!(solve("p cnf 3 2\na 1 0\ne 2 0\na 3 0\n1 -2 3 0\n-1 2 0\n"), Status::Sat);
    }

    #[test]
    fn literal_budget_gives_memout() {
        let mut text = String::from("p cnf 24 12\na 1 2 3 4 5 6 7 8 9 10 11 12 0\ne 13 14 15 16 17 18 19 20 21 22 23 24 0\n");
        for i in 1..=12 {
            text.push_str(&format!("{} {} {} 0\n", i, i + 12, (i % 12) + 13));
        }
        let f = parse_qdimacs(text.as_bytes()).unwrap();
        let out = solve_expansion(&f, Limits { time: None, memory: Some(4096) });
        assert_eq!(out.status, Status::Unknown);
        assert_eq!(out.reason_for_unknown, UnknownReason::Memout);
    }
}
