//! Truth-preserving PCNF simplification, grouped into named technique bundles.

mod techniques;

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Pcnf;
use techniques::Work;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    /// Existential units after universal reduction; growth: none.
    Unit,
    /// Pure literals of either quantifier; growth: none.
    Pure,
    /// Trailing universals of each clause; growth: none.
    UniversalReduction,
    /// Clauses containing another clause; growth: none.
    Subsumption,
    /// Clauses blocked on an existential literal; growth: none.
    BlockedClauseElim,
    /// Resolution on existentials with no deeper neighbours; growth: var-elim budget.
    VarElim,
    /// Copying the matrix for one innermost universal; growth: expansion budget.
    UniversalExpansion,
}

impl Technique {
    pub const ALL: [Technique; 7] = [
        Technique::Unit,
        Technique::Pure,
        Technique::UniversalReduction,
        Technique::Subsumption,
        Technique::BlockedClauseElim,
        Technique::VarElim,
        Technique::UniversalExpansion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Unit => "unit",
            Technique::Pure => "pure",
            Technique::UniversalReduction => "universal_reduction",
            Technique::Subsumption => "subsumption",
            Technique::BlockedClauseElim => "blocked_clause_elim",
            Technique::VarElim => "var_elim",
            Technique::UniversalExpansion => "universal_expansion",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = PreproError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| PreproError::UnknownTechnique(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreproError {
    #[error("bundle {0} has no techniques")]
    EmptyBundle(String),
    #[error("unknown technique {0:?}")]
    UnknownTechnique(String),
    #[error("variable {0} is not existential")]
    NotExistential(u32),
    #[error("variable {0} is not universal")]
    NotUniversal(u32),
    #[error("variable {0} is not in the innermost universal block")]
    NotInnermost(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    Simplified(Pcnf),
    SolvedSat,
    SolvedUnsat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreproOutcome {
    pub kind: OutcomeKind,
    /// Bundle techniques in order, with total application counts.
    pub log: Vec<(Technique, usize)>,
    pub timed_out: bool,
    /// Set when a technique panicked; the kind then holds the input formula.
    pub failed: bool,
}

impl PreproOutcome {
    fn from_work(w: &Work, log: Vec<(Technique, usize)>) -> PreproOutcome {
        let kind = if w.unsat {
            OutcomeKind::SolvedUnsat
        } else if w.clauses.is_empty() {
            OutcomeKind::SolvedSat
        } else {
            OutcomeKind::Simplified(w.to_pcnf())
        };
        PreproOutcome { kind, log, timed_out: false, failed: false }
    }

    pub fn is_solved(&self) -> bool {
        !matches!(self.kind, OutcomeKind::Simplified(_))
    }

    /// The resulting formula; `None` once solved.
    pub fn formula(&self) -> Option<&Pcnf> {
        match &self.kind {
            OutcomeKind::Simplified(f) => Some(f),
            _ => None,
        }
    }
}

/// Growth allowances in clauses. `None` for expansion means the current
/// clause count, so the matrix may at most double.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[derive(Default)]
pub struct Budgets {
    pub var_elim: usize,
    pub expansion: Option<usize>,
}


#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolBundle {
    pub name: String,
    techniques: Vec<Technique>,
    pub fixpoint: bool,
    #[serde(default)]
    pub budgets: Budgets,
}

impl ToolBundle {
    pub fn new(name: impl Into<String>, techniques: Vec<Technique>, fixpoint: bool) -> Result<ToolBundle, PreproError> {
        let name = name.into();
        if techniques.is_empty() {
            return Err(PreproError::EmptyBundle(name));
        }
        Ok(ToolBundle { name, techniques, fixpoint, budgets: Budgets::default() })
    }

    pub fn with_budgets(mut self, budgets: Budgets) -> ToolBundle {
        self.budgets = budgets;
        self
    }

    pub fn techniques(&self) -> &[Technique] {
        &self.techniques
    }

    /// The four built-in bundles, `A` through `D`.
    pub fn standard(label: char) -> Option<ToolBundle> {
        use Technique::*;
        let techniques = match label {
            'A' => vec![UniversalReduction, Subsumption],
            'B' => vec![Unit, Pure, UniversalReduction, Subsumption, BlockedClauseElim, VarElim, UniversalExpansion],
            'C' => vec![Unit, Pure, UniversalReduction, Subsumption, VarElim, UniversalExpansion],
            'D' => vec![Unit, Pure, UniversalReduction, Subsumption, VarElim],
            _ => return None,
        };
        ToolBundle::new(label.to_string(), techniques, true).ok()
    }
}

fn apply(w: &mut Work, t: Technique, budgets: Budgets) -> usize {
    match t {
        Technique::Unit => w.unit(),
        Technique::Pure => w.pure(),
        Technique::UniversalReduction => w.universal_reduction(),
        Technique::Subsumption => w.subsumption(),
        Technique::BlockedClauseElim => w.blocked_clause_elim(),
        Technique::VarElim => w.var_elim(budgets.var_elim),
        Technique::UniversalExpansion => {
            let growth = budgets.expansion.unwrap_or(w.clauses.len());
            w.universal_expansion(growth)
        }
    }
}

fn single(f: &Pcnf, t: Technique, run: impl FnOnce(&mut Work) -> usize) -> PreproOutcome {
    let mut w = Work::new(f);
    let n = if w.unsat { 0 } else { run(&mut w) };
    PreproOutcome::from_work(&w, vec![(t, n)])
}

/// Unit and pure literal rules, closed under each other.
pub fn apply_unit_pure(f: &Pcnf) -> PreproOutcome {
    let mut w = Work::new(f);
    let (mut units, mut pures) = (0, 0);
    while !w.unsat {
        let (u, p) = (w.unit(), if w.unsat { 0 } else { w.pure() });
        units += u;
        pures += p;
        if u + p == 0 {
            break;
        }
    }
    PreproOutcome::from_work(&w, vec![(Technique::Unit, units), (Technique::Pure, pures)])
}

pub fn eliminate_blocked_clauses(f: &Pcnf) -> PreproOutcome {
    single(f, Technique::BlockedClauseElim, Work::blocked_clause_elim)
}

pub fn subsume(f: &Pcnf) -> PreproOutcome {
    single(f, Technique::Subsumption, Work::subsumption)
}

pub fn universal_reduction(f: &Pcnf) -> PreproOutcome {
    single(f, Technique::UniversalReduction, Work::universal_reduction)
}

/// Resolves `v` away when nothing bound deeper shares a clause with it and the
/// resolvents add at most `growth` clauses; otherwise the formula is unchanged.
pub fn eliminate_variable(f: &Pcnf, v: u32, growth: usize) -> Result<PreproOutcome, PreproError> {
    if !f.scope().is_existential(v) {
        return Err(PreproError::NotExistential(v));
    }
    Ok(single(f, Technique::VarElim, |w| usize::from(w.eliminable(v) && w.eliminate(v, growth))))
}

/// Expands `u`, which must belong to the innermost universal level.
pub fn expand_universal(f: &Pcnf, u: u32, growth: usize) -> Result<PreproOutcome, PreproError> {
    if !f.scope().is_universal(u) {
        return Err(PreproError::NotUniversal(u));
    }
    let w = Work::new(f);
    if !w.innermost_universals().contains(&u) {
        return Err(PreproError::NotInnermost(u));
    }
    Ok(single(f, Technique::UniversalExpansion, |w| usize::from(w.expand(u, growth))))
}

/// Runs the bundle's techniques in order, repeating while the size measure
/// strictly drops if the bundle asks for a fixpoint. On a panic the input is
/// returned unchanged with `failed` set.
pub fn preprocess(f: &Pcnf, bundle: &ToolBundle, limit: Option<Duration>) -> PreproOutcome {
    let deadline = limit.map(|d| Instant::now() + d);
    match catch_unwind(AssertUnwindSafe(|| run_bundle(f, bundle, deadline))) {
        Ok(out) => out,
        Err(_) => {
            log::error!("bundle {} failed; passing the formula through", bundle.name);
            PreproOutcome {
                kind: OutcomeKind::Simplified(f.clone()),
                log: Vec::new(),
                timed_out: false,
                failed: true,
            }
        }
    }
}

fn run_bundle(f: &Pcnf, bundle: &ToolBundle, deadline: Option<Instant>) -> PreproOutcome {
    let mut w = Work::new(f);
    let mut counts: BTreeMap<Technique, usize> = BTreeMap::new();
    let mut timed_out = false;
    let done = |w: &Work| w.unsat || w.clauses.is_empty();
    'outer: while !done(&w) {
        let before = w.measure();
        for &t in &bundle.techniques {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                timed_out = true;
                break 'outer;
            }
            *counts.entry(t).or_default() += apply(&mut w, t, bundle.budgets);
            if done(&w) {
                break 'outer;
            }
        }
        if !bundle.fixpoint || w.measure() >= before {
            break;
        }
    }
    let log = bundle.techniques.iter().map(|&t| (t, counts.get(&t).copied().unwrap_or(0))).collect();
    let mut out = PreproOutcome::from_work(&w, log);
    out.timed_out = timed_out;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_qdimacs, write_qdimacs};

    fn pcnf(text: &str) -> Pcnf {
        parse_qdimacs(text.as_bytes()).unwrap()
    }

    fn clauses(o: &PreproOutcome) -> Vec<Vec<i32>> {
        let mut cs: Vec<Vec<i32>> = o
            .formula()
            .expect("simplified")
            .clauses()
            .iter()
            .map(|c| c.lits().iter().map(|l| l.to_dimacs()).collect())
            .collect();
        cs.sort();
        cs
    }

    #[test]
    fn unit_and_pure() {
        let f = pcnf("p cnf 2 2\ne 1 2 0\n1 0\n1 2 0\n");
        assert_eq!(apply_unit_pure(&f).kind, OutcomeKind::SolvedSat);
        assert_eq!(apply_unit_pure(&pcnf("p cnf 1 1\na 1 0\n1 0\n")).kind, OutcomeKind::SolvedUnsat);
        assert_eq!(apply_unit_pure(&pcnf("p cnf 2 1\na 1 0\ne 2 0\n1 2 0\n")).kind, OutcomeKind::SolvedSat);
    }

    #[test]
    fn blocked_clauses() {
        let f = pcnf("p cnf 2 2\ne 1 2 0\n1 2 0\n-1 -2 0\n");
        let o = eliminate_blocked_clauses(&f);
        assert!(o.log[0].1 >= 1);
        assert_eq!(o.kind, OutcomeKind::SolvedSat);
        let f = pcnf("p cnf 3 2\na 1 0\ne 2 3 0\n1 2 0\n-3 2 0\n");
        assert_eq!(eliminate_blocked_clauses(&f).kind, OutcomeKind::SolvedSat);
        let empty = pcnf("p cnf 1 0\ne 1 0\n");
        assert_eq!(eliminate_blocked_clauses(&empty).kind, OutcomeKind::SolvedSat);
    }

    #[test]
    fn variable_elimination() {
        let f = pcnf("p cnf 3 2\ne 1 2 3 0\n1 2 0\n-1 3 0\n");
        assert_eq!(clauses(&eliminate_variable(&f, 1, 0).unwrap()), vec![vec![2, 3]]);
        let f = pcnf("p cnf 1 2\ne 1 0\n1 0\n-1 0\n");
        assert_eq!(eliminate_variable(&f, 1, 0).unwrap().kind, OutcomeKind::SolvedUnsat);
        // nine resolvents would replace six clauses
        let f = pcnf("p cnf 7 6\ne 1 2 3 4 5 6 7 0\n1 2 0\n1 3 0\n1 4 0\n-1 5 0\n-1 6 0\n-1 7 0\n");
        let o = eliminate_variable(&f, 1, 0).unwrap();
        assert_eq!(o.log, vec![(Technique::VarElim, 0)]);
        assert_eq!(clauses(&o).len(), 6);
        assert_eq!(eliminate_variable(&pcnf("p cnf 1 1\na 1 0\n1 0\n"), 1, 0), Err(PreproError::NotExistential(1)));
        // a deeper universal blocks elimination
        let f = pcnf("p cnf 3 2\ne 1 0\na 2 0\ne 3 0\n1 2 3 0\n-1 3 0\n");
        assert_eq!(eliminate_variable(&f, 1, 0).unwrap().log[0].1, 0);
    }

    #[test]
    fn expansion() {
        let f = pcnf("p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n");
        let o = expand_universal(&f, 1, 10).unwrap();
        assert_eq!(clauses(&o), vec![vec![-2], vec![3]]);
        assert_eq!(write_qdimacs(o.formula().unwrap()).lines().nth(1), Some("e 2 3 0"));
        assert_eq!(expand_universal(&f, 1, 0).unwrap().log[0].1, 1);
        let big = pcnf("p cnf 3 3\na 1 0\ne 2 3 0\n1 2 0\n-1 -2 0\n2 3 0\n");
        assert_eq!(expand_universal(&big, 1, 0).unwrap().log[0].1, 0);
        let unused = pcnf("p cnf 2 1\na 1 0\ne 2 0\n2 0\n");
        let o = expand_universal(&unused, 1, 0).unwrap();
        assert_eq!(write_qdimacs(o.formula().unwrap()), "p cnf 2 1\ne 2 0\n2 0\n");
        assert_eq!(expand_universal(&f, 2, 9), Err(PreproError::NotUniversal(2)));
        let two = pcnf("p cnf 3 1\na 1 0\ne 2 0\na 3 0\n1 2 3 0\n");
        assert_eq!(expand_universal(&two, 1, 9), Err(PreproError::NotInnermost(1)));
    }

    #[test]
    fn subsumption() {
        let f = pcnf("p cnf 2 3\ne 1 2 0\n1 0\n1 2 0\n1 0\n");
        assert_eq!(clauses(&subsume(&f)), vec![vec![1]]);
        let f = pcnf("p cnf 2 2\ne 1 2 0\n1 0\n2 0\n");
        assert_eq!(subsume(&f).log[0].1, 0);
    }

    #[test]
    fn bundles() {
        assert_eq!(ToolBundle::new("X", vec![], true), Err(PreproError::EmptyBundle("X".into())));
        let up = ToolBundle::new("U", vec![Technique::Unit, Technique::Pure], false).unwrap();
        assert_eq!(preprocess(&pcnf("p cnf 1 1\na 1 0\n1 0\n"), &up, None).kind, OutcomeKind::SolvedUnsat);
        let empty = pcnf("p cnf 2 0\na 1 0\ne 2 0\n");
        for l in "ABCD".chars() {
            let b = ToolBundle::standard(l).unwrap();
            assert_eq!(preprocess(&empty, &b, None).kind, OutcomeKind::SolvedSat);
        }
        assert_eq!("var_elim".parse::<Technique>(), Ok(Technique::VarElim));
        assert!("bce".parse::<Technique>().is_err());
    }

    #[test]
    fn zero_limit_times_out_with_input() {
        let f = pcnf("p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n");
        let o = preprocess(&f, &ToolBundle::standard('B').unwrap(), Some(Duration::ZERO));
        assert!(o.timed_out);
        assert_eq!(o.formula().map(write_qdimacs), Some(write_qdimacs(&f)));
    }
}
