//! Proof checking for traditional Q-resolution and term resolution.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Literal, Pcnf, Scope};
use crate::solver::trace::{parse_trace_line, TraceLine};
use crate::solver::{Proof, ProofKind, StepKind, TraceStep};

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    #[error("malformed trace: {0}")]
    Malformed(String),
    #[error("step id {0} defined twice")]
    DuplicateId(u32),
    #[error("reference to unknown or later step {0}")]
    MalformedReference(u32),
    #[error("step kind does not belong to this proof kind")]
    WrongKind,
    #[error("wrong number of antecedents")]
    AntecedentCount,
    #[error("input step does not match matrix clause {0}")]
    InputMismatch(usize),
    #[error("input cube is contradictory or leaves matrix clause {0} unsatisfied")]
    CubeNotSatisfying(usize),
    #[error("pivot {0} has the wrong quantifier (universal pivots on clauses, existential pivots on cubes)")]
    PivotViolation(u32),
    #[error("pivot {0} does not occur with opposite signs in the antecedents")]
    PivotNotPresent(u32),
    #[error("resolvent contains both polarities of variable {0}")]
    TautologicalResolvent(u32),
    #[error("recorded literals differ from the resolvent")]
    ResolventMismatch,
    #[error("reduction removes literal {0}, which is not reducible")]
    IllegalReduction(i32),
    #[error("root step is not empty")]
    NonEmptyRoot,
    #[error("more than {0} steps would have to be retained")]
    RetentionCap(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub accepted: bool,
    pub failing_step: Option<u32>,
    pub reason: Option<RejectReason>,
    pub steps: usize,
    pub resolutions: usize,
    pub max_width: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Upper bound on steps kept in memory while streaming a trace file.
    pub retained_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { retained_cap: 10_000_000 }
    }
}

struct Checker<'a> {
    f: &'a Pcnf,
    scope: Scope,
    kind: ProofKind,
    retained: HashMap<u32, Vec<Literal>>,
    seen: HashSet<u32>,
    steps: usize,
    resolutions: usize,
    max_width: usize,
}

type Verdict = Result<(), RejectReason>;

impl<'a> Checker<'a> {
    fn new(f: &'a Pcnf, kind: ProofKind) -> Checker<'a> {
        Checker {
            f,
            scope: f.scope(),
            kind,
            retained: HashMap::new(),
            seen: HashSet::new(),
            steps: 0,
            resolutions: 0,
            max_width: 0,
        }
    }

    fn cube(&self) -> bool {
        self.kind == ProofKind::Satisfaction
    }

    fn bound(&self, l: Literal) -> bool {
        self.scope.level(l.var()) > 0
    }

    fn antecedent(&self, id: u32) -> Result<&Vec<Literal>, RejectReason> {
        self.retained.get(&id).ok_or(RejectReason::MalformedReference(id))
    }

    /// Literals of the kind that may be dropped by reduction: universal on
    /// clauses, existential on cubes.
    fn reducible_quantifier(&self, l: Literal) -> bool {
        self.scope.is_universal(l.var()) != self.cube()
    }

    fn step(&mut self, s: &TraceStep, input: Option<usize>) -> Verdict {
        if !self.seen.insert(s.id) {
            return Err(RejectReason::DuplicateId(s.id));
        }
        if s.kind.is_cube() != self.cube() {
            return Err(RejectReason::WrongKind);
        }
        let mut lits = s.lits.clone();
        lits.sort_unstable();
        lits.dedup();
        if let Some(&l) = lits.iter().find(|l| !self.bound(**l)) {
            return Err(RejectReason::Malformed(format!("unbound literal {l}")));
        }
        if let Some(w) = lits.windows(2).find(|w| w[0] == !w[1]) {
            return Err(RejectReason::TautologicalResolvent(w[0].var()));
        }
        match s.kind {
            StepKind::InputClause => self.input_clause(s, &lits, input)?,
            StepKind::InputCube => self.input_cube(s, &lits)?,
            StepKind::Resolution | StepKind::CubeResolution => self.resolution(s, &lits)?,
            StepKind::UniversalReduction | StepKind::ExistentialReduction => self.reduction(s, &lits)?,
        }
        self.steps += 1;
        self.max_width = self.max_width.max(lits.len());
        self.retained.insert(s.id, lits);
        Ok(())
    }

    fn input_clause(&self, s: &TraceStep, lits: &[Literal], input: Option<usize>) -> Verdict {
        if !s.antecedents.is_empty() {
            return Err(RejectReason::AntecedentCount);
        }
        let idx = input.ok_or_else(|| RejectReason::Malformed(format!("input step {} has no clause index", s.id)))?;
        let clause = self.f.clauses().get(idx).ok_or(RejectReason::InputMismatch(idx))?;
        let mut want = clause.lits().to_vec();
        want.sort_unstable();
        want.dedup();
        if want != lits {
            return Err(RejectReason::InputMismatch(idx));
        }
        Ok(())
    }

    fn input_cube(&self, s: &TraceStep, lits: &[Literal]) -> Verdict {
        if !s.antecedents.is_empty() {
            return Err(RejectReason::AntecedentCount);
        }
        for (i, c) in self.f.clauses().iter().enumerate() {
            if !c.is_tautology() && !c.lits().iter().any(|l| lits.binary_search(l).is_ok()) {
                return Err(RejectReason::CubeNotSatisfying(i));
            }
        }
        Ok(())
    }

    fn resolution(&mut self, s: &TraceStep, lits: &[Literal]) -> Verdict {
        let [a, b] = s.antecedents[..] else { return Err(RejectReason::AntecedentCount) };
        let (la, lb) = (self.antecedent(a)?, self.antecedent(b)?);
        let pivot = match s.pivot {
            Some(p) => p,
            None => {
                let clashing: Vec<u32> = la.iter().filter(|l| lb.contains(&!**l)).map(|l| l.var()).collect();
                match clashing[..] {
                    [] => return Err(RejectReason::PivotNotPresent(0)),
                    [p] => p,
                    [_, q, ..] => return Err(RejectReason::TautologicalResolvent(q)),
                }
            }
        };
        // clause resolution needs an existential pivot, cube resolution a universal one
        if self.scope.is_universal(pivot) != self.cube() {
            return Err(RejectReason::PivotViolation(pivot));
        }
        let pa = la.iter().find(|l| l.var() == pivot);
        let pb = lb.iter().find(|l| l.var() == pivot);
        match (pa, pb) {
            (Some(&x), Some(&y)) if x == !y => {}
            _ => return Err(RejectReason::PivotNotPresent(pivot)),
        }
        let mut res: Vec<Literal> = la.iter().chain(lb.iter()).copied().filter(|l| l.var() != pivot).collect();
        res.sort_unstable();
        res.dedup();
        if let Some(w) = res.windows(2).find(|w| w[0] == !w[1]) {
            return Err(RejectReason::TautologicalResolvent(w[0].var()));
        }
        if res != lits && self.reduce(&res) != lits {
            return Err(RejectReason::ResolventMismatch);
        }
        self.resolutions += 1;
        Ok(())
    }

    fn reduce(&self, lits: &[Literal]) -> Vec<Literal> {
        let max_kept = lits
            .iter()
            .filter(|l| !self.reducible_quantifier(**l))
            .map(|l| self.scope.level(l.var()))
            .max()
            .unwrap_or(0);
        lits.iter().copied().filter(|l| !self.reducible_quantifier(*l) || self.scope.level(l.var()) < max_kept).collect()
    }

    fn reduction(&self, s: &TraceStep, lits: &[Literal]) -> Verdict {
        let [a] = s.antecedents[..] else { return Err(RejectReason::AntecedentCount) };
        let parent = self.antecedent(a)?;
        if lits.iter().any(|l| parent.binary_search(l).is_err()) {
            return Err(RejectReason::ResolventMismatch);
        }
        let max_kept = parent
            .iter()
            .filter(|l| !self.reducible_quantifier(**l))
            .map(|l| self.scope.level(l.var()))
            .max()
            .unwrap_or(0);
        for &l in parent {
            if lits.binary_search(&l).is_err() && (!self.reducible_quantifier(l) || self.scope.level(l.var()) <= max_kept) {
                return Err(RejectReason::IllegalReduction(l.to_dimacs()));
            }
        }
        Ok(())
    }

    fn root(&self, root: u32) -> Verdict {
        match self.retained.get(&root) {
            None => Err(RejectReason::MalformedReference(root)),
            Some(l) if !l.is_empty() => Err(RejectReason::NonEmptyRoot),
            Some(_) => Ok(()),
        }
    }

    fn report(&self, failure: Option<(Option<u32>, RejectReason)>) -> CheckReport {
        let (failing_step, reason) = match failure {
            Some((s, r)) => (s, Some(r)),
            None => (None, None),
        };
        CheckReport {
            accepted: reason.is_none(),
            failing_step,
            reason,
            steps: self.steps,
            resolutions: self.resolutions,
            max_width: self.max_width,
        }
    }
}

/// Checks a refutation: input clauses, existential pivots, universal reductions, empty root.
pub fn check_refutation(p: &Proof, f: &Pcnf) -> CheckReport {
    check_as(p, f, ProofKind::Refutation)
}

/// Checks a satisfaction proof: satisfying input cubes, universal pivots, existential reductions, empty root.
pub fn check_satisfaction(p: &Proof, f: &Pcnf) -> CheckReport {
    check_as(p, f, ProofKind::Satisfaction)
}

/// Dispatches on the proof's own kind.
pub fn check_proof(p: &Proof, f: &Pcnf) -> CheckReport {
    check_as(p, f, p.kind)
}

fn check_as(p: &Proof, f: &Pcnf, kind: ProofKind) -> CheckReport {
    let mut c = Checker::new(f, kind);
    if p.kind != kind {
        return c.report(Some((None, RejectReason::WrongKind)));
    }
    for s in &p.steps {
        if let Err(r) = c.step(s, p.input_map.get(&s.id).copied()) {
            return c.report(Some((Some(s.id), r)));
        }
    }
    let failure = c.root(p.root).err().map(|r| (Some(p.root), r));
    c.report(failure)
}

/// Checks a trace file without loading it whole. A first pass records the
/// last use of every step so that the second pass can drop steps as soon as
/// nothing later refers to them.
pub fn check_trace_file(path: &Path, f: &Pcnf, opts: CheckOptions) -> std::io::Result<CheckReport> {
    let mut last_use: HashMap<u32, usize> = HashMap::new();
    let mut root = None;
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        match parse_trace_line(&line?, n + 1) {
            Ok(Some(TraceLine::Step { antecedents, .. })) => {
                for a in antecedents {
                    last_use.insert(a, n);
                }
            }
            Ok(Some(TraceLine::Root { id, .. })) => root = Some(id),
            _ => {}
        }
    }
    Ok(check_stream(BufReader::new(File::open(path)?), f, opts, &last_use, root))
}

fn check_stream<R: BufRead>(
    reader: R,
    f: &Pcnf,
    opts: CheckOptions,
    last_use: &HashMap<u32, usize>,
    root_hint: Option<u32>,
) -> CheckReport {
    let mut checker: Option<Checker> = None;
    let mut inputs: HashMap<u32, Option<usize>> = HashMap::new();
    let mut root = None;
    let malformed = |c: &Option<Checker>, s: Option<u32>, m: String| match c {
        Some(c) => c.report(Some((s, RejectReason::Malformed(m)))),
        None => Checker::new(f, ProofKind::Refutation).report(Some((s, RejectReason::Malformed(m)))),
    };
    for (n, line) in reader.lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => return malformed(&checker, None, e.to_string()),
        };
        let item = match parse_trace_line(&line, n + 1) {
            Ok(Some(i)) => i,
            Ok(None) => continue,
            Err(e) => return malformed(&checker, None, e.to_string()),
        };
        match item {
            TraceLine::Header { kind, .. } => checker = Some(Checker::new(f, kind)),
            TraceLine::Input { id, clause } => {
                inputs.insert(id, clause);
            }
            TraceLine::Step { id, lits, antecedents } => {
                let Some(c) = checker.as_mut() else {
                    return malformed(&checker, Some(id), "step before header".into());
                };
                let cube = c.cube();
                let kind = match (inputs.contains_key(&id), antecedents.len(), cube) {
                    (true, _, false) => StepKind::InputClause,
                    (true, _, true) => StepKind::InputCube,
                    (false, 2, false) => StepKind::Resolution,
                    (false, 2, true) => StepKind::CubeResolution,
                    (false, _, false) => StepKind::UniversalReduction,
                    (false, _, true) => StepKind::ExistentialReduction,
                };
                let step = TraceStep { id, kind, antecedents, pivot: None, lits };
                if let Err(r) = c.step(&step, inputs.get(&id).copied().flatten()) {
                    return c.report(Some((Some(id), r)));
                }
                for a in &step.antecedents {
                    if last_use.get(a) == Some(&n) && Some(*a) != root_hint {
                        c.retained.remove(a);
                    }
                }
                if c.retained.len() > opts.retained_cap {
                    return c.report(Some((Some(id), RejectReason::RetentionCap(opts.retained_cap))));
                }
            }
            TraceLine::Root { id, kind } => {
                if checker.as_ref().is_some_and(|c| c.kind != kind) {
                    return checker.as_ref().expect("checked").report(Some((Some(id), RejectReason::WrongKind)));
                }
                root = Some(id);
            }
        }
    }
    let Some(c) = checker else { return malformed(&checker, None, "missing header".into()) };
    let Some(root) = root else { return c.report(Some((None, RejectReason::Malformed("missing root line".into())))) };
    let failure = c.root(root).err().map(|r| (Some(root), r));
    c.report(failure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_qdimacs;
    use crate::solver::trace::read_proof;
    use std::collections::BTreeMap;

    fn step(id: u32, kind: StepKind, ants: &[u32], pivot: Option<u32>, lits: &[i32]) -> TraceStep {
        TraceStep {
            id,
            kind,
            antecedents: ants.to_vec(),
            pivot,
            lits: lits.iter().map(|&l| Literal::from_dimacs(l).unwrap()).collect(),
        }
    }

    fn refutation_of_x_and_not_x(pivot: u32) -> (Pcnf, Proof) {
        let f = parse_qdimacs(b"p cnf 2 2\ne 1 0\na 2 0\n1 0\n-1 0\n").unwrap();
        let p = Proof {
            kind: ProofKind::Refutation,
            max_var: 2,
            steps: vec![
                step(1, StepKind::InputClause, &[], None, &[1]),
                step(2, StepKind::InputClause, &[], None, &[-1]),
                step(3, StepKind::Resolution, &[1, 2], Some(pivot), &[]),
            ],
            root: 3,
            input_map: BTreeMap::from([(1, 0), (2, 1)]),
        };
        (f, p)
    }

    #[test]
    fn accepts_and_rejects_small_refutations() {
        let (f, p) = refutation_of_x_and_not_x(1);
        let r = check_refutation(&p, &f);
        assert!(r.accepted, "{r:?}");
        assert_eq!((r.steps, r.resolutions, r.max_width), (3, 1, 1));

        let (f, p) = refutation_of_x_and_not_x(2);
        let r = check_refutation(&p, &f);
        assert_eq!(r.reason, Some(RejectReason::PivotViolation(2)));
        assert_eq!(r.failing_step, Some(3));

        let (f, mut p) = refutation_of_x_and_not_x(1);
        p.steps[1].lits = vec![Literal::from_dimacs(1).unwrap()];
        assert_eq!(check_refutation(&p, &f).reason, Some(RejectReason::InputMismatch(1)));

        let (f, p) = refutation_of_x_and_not_x(1);
        assert_eq!(check_satisfaction(&p, &f).reason, Some(RejectReason::WrongKind));
    }

    #[test]
    fn satisfaction_with_existential_reduction() {
        let f = parse_qdimacs(b"p cnf 1 1\ne 1 0\n1 0\n").unwrap();
        let mut p = Proof {
            kind: ProofKind::Satisfaction,
            max_var: 1,
            steps: vec![
                step(1, StepKind::InputCube, &[], None, &[1]),
                step(2, StepKind::ExistentialReduction, &[1], None, &[]),
            ],
            root: 2,
            input_map: BTreeMap::new(),
        };
        assert!(check_satisfaction(&p, &f).accepted);
        p.steps[0].lits = vec![Literal::from_dimacs(-1).unwrap()];
        assert_eq!(check_satisfaction(&p, &f).reason, Some(RejectReason::CubeNotSatisfying(0)));
    }

    #[test]
    fn reduction_must_drop_only_trailing_literals() {
        // ∀u ∃x: reducing u out of (u ∨ x) is illegal
        let f = parse_qdimacs(b"p cnf 2 1\na 1 0\ne 2 0\n1 2 0\n").unwrap();
        let p = Proof {
            kind: ProofKind::Refutation,
            max_var: 2,
            steps: vec![
                step(1, StepKind::InputClause, &[], None, &[1, 2]),
                step(2, StepKind::UniversalReduction, &[1], None, &[2]),
            ],
            root: 2,
            input_map: BTreeMap::from([(1, 0)]),
        };
        assert_eq!(check_refutation(&p, &f).reason, Some(RejectReason::IllegalReduction(1)));
    }

    #[test]
    fn streaming_matches_in_memory() {
        let (f, p) = refutation_of_x_and_not_x(1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.qrp");
        std::fs::write(&path, p.to_text()).unwrap();
        let r = check_trace_file(&path, &f, CheckOptions::default()).unwrap();
        assert!(r.accepted, "{r:?}");
        let back = read_proof(p.to_text().as_bytes()).unwrap();
        assert!(check_proof(&back, &f).accepted);

        std::fs::write(&path, p.to_text().replace("3 0 1 2 0", "3 0 1 9 0")).unwrap();
        let r = check_trace_file(&path, &f, CheckOptions::default()).unwrap();
        assert_eq!(r.reason, Some(RejectReason::MalformedReference(9)));
        let r = check_trace_file(&path, &f, CheckOptions { retained_cap: 0 }).unwrap();
        assert!(!r.accepted);
    }
}
