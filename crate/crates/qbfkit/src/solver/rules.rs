use thiserror::Error;

use crate::formula::{Clause, Literal, Scope};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("pivot {0} does not occur with opposite signs in the two antecedents")]
    PivotNotPresent(u32),
    #[error("pivot {0} has the wrong quantifier for this calculus")]
    WrongQuantifier(u32),
    #[error("resolvent contains both polarities of variable {0}")]
    Tautology(u32),
}

/// Drops every universal literal whose level exceeds the level of all
/// existential literals in `c`. Literal order of the survivors is kept.
pub fn universal_reduce(c: &Clause, scope: &Scope) -> Clause {
    reduce(c, scope, true)
}

/// Cube dual of [`universal_reduce`]: drops trailing existential literals.
pub fn existential_reduce(cube: &Clause, scope: &Scope) -> Clause {
    reduce(cube, scope, false)
}

fn reduce(c: &Clause, scope: &Scope, clause_side: bool) -> Clause {
    let keeps = |l: &Literal| scope.is_existential(l.var()) == clause_side;
    let max_kept = c.lits().iter().filter(|l| keeps(l)).map(|l| scope.level(l.var())).max().unwrap_or(0);
    c.lits().iter().copied().filter(|l| keeps(l) || scope.level(l.var()) < max_kept).collect()
}

/// Union without the pivot, deduplicated and sorted.
pub(crate) fn raw_resolvent(a: &[Literal], b: &[Literal], pivot: u32) -> Result<Vec<Literal>, ResolveError> {
    let pa = a.iter().find(|l| l.var() == pivot);
    let pb = b.iter().find(|l| l.var() == pivot);
    match (pa, pb) {
        (Some(&x), Some(&y)) if x == !y => {}
        _ => return Err(ResolveError::PivotNotPresent(pivot)),
    }
    let mut out: Vec<Literal> = a.iter().chain(b).copied().filter(|l| l.var() != pivot).collect();
    out.sort_unstable();
    out.dedup();
    if let Some(w) = out.windows(2).find(|w| w[0] == !w[1]) {
        return Err(ResolveError::Tautology(w[0].var()));
    }
    Ok(out)
}

/// Q-resolution on an existential pivot followed by universal reduction.
pub fn qresolve(c1: &Clause, c2: &Clause, pivot: u32, scope: &Scope) -> Result<Clause, ResolveError> {
    if !scope.is_existential(pivot) {
        return Err(ResolveError::WrongQuantifier(pivot));
    }
    let r = raw_resolvent(c1.lits(), c2.lits(), pivot)?;
    Ok(universal_reduce(&Clause::new(r), scope))
}

/// Term resolution on a universal pivot followed by existential reduction.
pub fn term_resolve(k1: &Clause, k2: &Clause, pivot: u32, scope: &Scope) -> Result<Clause, ResolveError> {
    if !scope.is_universal(pivot) {
        return Err(ResolveError::WrongQuantifier(pivot));
    }
    let r = raw_resolvent(k1.lits(), k2.lits(), pivot)?;
    Ok(existential_reduce(&Clause::new(r), scope))
}
