//! Search-based solving with clause and cube learning.
//!
//! Decisions follow the prefix: a variable is decided only once every
//! variable of an outer block is assigned. Propagation uses the usual QBF
//! rules on both sides:
//!
//! - a clause with no true literal and no unassigned existential is a
//!   conflict; with exactly one unassigned existential `e` and every
//!   unassigned universal quantified inside `e`, it forces `e`;
//! - a cube with no false literal and no unassigned universal is satisfied;
//!   with exactly one unassigned universal `u` and every unassigned
//!   existential inside `u`, it forces `u` to falsify the cube.
//!
//! Learning resolves on implied literals of the conflict (or solution) level
//! until the constraint is asserting. Universals forced by cubes and
//! pure-literal assignments are each placed on a level of their own, with a
//! fresh level opened behind them; this keeps later assignments of variables
//! that were unassigned inside a reason out of that reason's level, which is
//! what keeps the resolvents free of complementary pairs.
//!
//! Should learning nevertheless fail to find a legal resolution, the solver
//! restarts without learning (plain chronological search). The answer stays
//! correct but no proof is produced; [`SearchStats::fallbacks`] counts this.

use std::time::Instant;

use log::{debug, trace};

use super::rules::raw_resolvent;
use super::trace::{Proof, ProofKind, StepKind, TraceRecorder};
use super::{Limits, SolveOutcome, Status, UnknownReason};
use crate::formula::{Clause, Literal, Pcnf, Scope};

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub pure_literals: bool,
    /// Geometric restart schedule; off by default so traces stay simple to follow.
    pub restarts: bool,
    pub restart_base: u64,
    pub restart_factor: f64,
    /// Activity decay factor applied after each learned constraint.
    pub decay: f64,
    /// Wall clock and memory are checked every this many propagations.
    pub check_interval: u64,
    pub trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            pure_literals: true,
            restarts: false,
            restart_base: 100,
            restart_factor: 1.5,
            decay: 0.95,
            check_interval: 1024,
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub solutions: u64,
    pub learned_clauses: u64,
    pub learned_cubes: u64,
    pub restarts: u64,
    pub fallbacks: u64,
}

/// Result of closing the current assignment under propagation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Propagation {
    /// A clause with no true literal and no unassigned existential.
    Conflict(Vec<Literal>),
    /// Every matrix clause is satisfied, or a learned cube is.
    Solution,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reason {
    Decision { flipped: bool },
    Clause(usize),
    Cube(usize),
    Pure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Clause,
    Cube,
}

impl Side {
    /// Literals that may be resolved on (existential for clauses).
    fn is_primary(self, universal: bool) -> bool {
        match self {
            Side::Clause => !universal,
            Side::Cube => universal,
        }
    }

    /// Value every literal of a working constraint must have.
    fn working_value(self) -> i8 {
        match self {
            Side::Clause => -1,
            Side::Cube => 1,
        }
    }
}

#[derive(Clone, Debug)]
struct Constraint {
    lits: Vec<Literal>,
    step: Option<u32>,
    /// Matrix index for original clauses.
    original: Option<usize>,
}

enum Event {
    Conflict(usize),
    CubeSatisfied(usize),
    Cover,
}

enum Learned {
    Empty(Option<u32>),
    Asserting { lits: Vec<Literal>, step: Option<u32>, lit: Literal, level: usize },
}

struct Stuck;

enum Stop {
    Done(Status),
    Limit(UnknownReason),
    Stuck,
}

pub struct SearchSolver {
    config: SearchConfig,
    scope: Scope,
    num_vars: usize,
    universal: Vec<bool>,
    qlevel: Vec<u32>,
    /// Variables of each merged block, outermost first.
    blocks: Vec<Vec<u32>>,
    input: Vec<Clause>,
    clauses: Vec<Constraint>,
    cubes: Vec<Constraint>,
    occ_clause: Vec<Vec<usize>>,
    occ_cube: Vec<Vec<usize>>,
    true_count: Vec<u32>,
    false_count: Vec<u32>,
    num_original: usize,
    unsat_original: usize,
    value: Vec<i8>,
    level: Vec<usize>,
    reason: Vec<Reason>,
    pos: Vec<usize>,
    trail: Vec<Literal>,
    trail_lim: Vec<usize>,
    qhead: usize,
    pending_cubes: Vec<usize>,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    learning: bool,
    recorder: Option<TraceRecorder>,
    proof: Option<Proof>,
    stats: SearchStats,
    mem_bytes: usize,
    deadline: Option<Instant>,
    mem_limit: Option<usize>,
    next_restart: f64,
    since_restart: u64,
    max_var: u32,
}

impl SearchSolver {
    pub fn new(f: &Pcnf, config: SearchConfig) -> SearchSolver {
        let scope = f.scope();
        let n = f.max_var() as usize;
        let mut universal = vec![false; n + 1];
        let mut qlevel = vec![0; n + 1];
        let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); scope.num_levels() as usize];
        for v in f.prefix().vars() {
            universal[v as usize] = scope.is_universal(v);
            qlevel[v as usize] = scope.level(v);
            blocks[scope.level(v) as usize - 1].push(v);
        }
        let mut s = SearchSolver {
            config,
            scope,
            num_vars: n,
            universal,
            qlevel,
            blocks,
            input: f.clauses().to_vec(),
            clauses: Vec::new(),
            cubes: Vec::new(),
            occ_clause: vec![Vec::new(); 2 * n + 2],
            occ_cube: vec![Vec::new(); 2 * n + 2],
            true_count: Vec::new(),
            false_count: Vec::new(),
            num_original: 0,
            unsat_original: 0,
            value: vec![0; n + 1],
            level: vec![0; n + 1],
            reason: vec![Reason::Pure; n + 1],
            pos: vec![0; n + 1],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            pending_cubes: Vec::new(),
            activity: vec![0.0; n + 1],
            var_inc: 1.0,
            phase: vec![false; n + 1],
            learning: true,
            recorder: config.trace.then(TraceRecorder::new),
            proof: None,
            stats: SearchStats::default(),
            mem_bytes: 0,
            deadline: None,
            mem_limit: None,
            next_restart: config.restart_base as f64,
            since_restart: 0,
            max_var: f.max_var(),
        };
        for (i, c) in f.clauses().iter().enumerate() {
            let sorted = c.sorted();
            if sorted.is_tautology() {
                continue;
            }
            let reduced = super::rules::universal_reduce(&sorted, &s.scope).into_lits();
            s.add_constraint(Side::Clause, reduced, None, Some(i));
            s.num_original += 1;
        }
        s.unsat_original = s.num_original;
        s
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    /// Proof of the last answer when tracing was enabled.
    pub fn take_proof(&mut self) -> Option<Proof> {
        self.proof.take()
    }

    pub fn learned_clauses(&self) -> Vec<Clause> {
        self.clauses.iter().filter(|c| c.original.is_none()).map(|c| Clause::new(c.lits.clone())).collect()
    }

    pub fn learned_cubes(&self) -> Vec<Clause> {
        self.cubes.iter().map(|c| Clause::new(c.lits.clone())).collect()
    }

    /// Current trail as (literal, decision level, is_decision).
    pub fn trail(&self) -> Vec<(Literal, usize, bool)> {
        self.trail
            .iter()
            .map(|&l| (l, self.level[l.var() as usize], matches!(self.reason[l.var() as usize], Reason::Decision { .. })))
            .collect()
    }

    fn lit_value(&self, l: Literal) -> i8 {
        let v = self.value[l.var() as usize];
        if l.is_positive() {
            v
        } else {
            -v
        }
    }

    fn is_universal(&self, l: Literal) -> bool {
        self.universal[l.var() as usize]
    }

    fn qlev(&self, l: Literal) -> u32 {
        self.qlevel[l.var() as usize]
    }

    fn lvl(&self, l: Literal) -> usize {
        self.level[l.var() as usize]
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn add_constraint(&mut self, side: Side, lits: Vec<Literal>, step: Option<u32>, original: Option<usize>) -> usize {
        self.mem_bytes += lits.len() * std::mem::size_of::<Literal>() + 48;
        match side {
            Side::Clause => {
                let idx = self.clauses.len();
                let t = lits.iter().filter(|&&l| self.lit_value(l) == 1).count() as u32;
                for &l in &lits {
                    self.occ_clause[l.index()].push(idx);
                }
                self.true_count.push(t);
                self.clauses.push(Constraint { lits, step, original });
                idx
            }
            Side::Cube => {
                let idx = self.cubes.len();
                let fc = lits.iter().filter(|&&l| self.lit_value(l) == -1).count() as u32;
                for &l in &lits {
                    self.occ_cube[l.index()].push(idx);
                }
                self.false_count.push(fc);
                self.cubes.push(Constraint { lits, step, original: None });
                idx
            }
        }
    }

    fn new_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    fn assign(&mut self, l: Literal, reason: Reason) {
        let v = l.var() as usize;
        debug_assert_eq!(self.value[v], 0, "reassigning {l}");
        self.value[v] = if l.is_positive() { 1 } else { -1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.pos[v] = self.trail.len();
        self.trail.push(l);
        for i in 0..self.occ_clause[l.index()].len() {
            let ci = self.occ_clause[l.index()][i];
            self.true_count[ci] += 1;
            if self.true_count[ci] == 1 && self.clauses[ci].original.is_some() {
                self.unsat_original -= 1;
            }
        }
        for &ki in &self.occ_cube[(!l).index()] {
            self.false_count[ki] += 1;
        }
    }

    /// Universal implications and pure literals sit alone on their level.
    fn assign_isolated(&mut self, l: Literal, reason: Reason) {
        self.new_level();
        self.assign(l, reason);
        self.new_level();
    }

    fn backtrack(&mut self, target: usize) {
        if self.decision_level() <= target {
            return;
        }
        let start = self.trail_lim[target];
        while self.trail.len() > start {
            let l = self.trail.pop().expect("nonempty trail");
            let v = l.var() as usize;
            self.phase[v] = l.is_positive();
            self.value[v] = 0;
            for i in 0..self.occ_clause[l.index()].len() {
                let ci = self.occ_clause[l.index()][i];
                self.true_count[ci] -= 1;
                if self.true_count[ci] == 0 && self.clauses[ci].original.is_some() {
                    self.unsat_original += 1;
                }
            }
            for &ki in &self.occ_cube[(!l).index()] {
                self.false_count[ki] -= 1;
            }
        }
        self.trail_lim.truncate(target);
        self.qhead = self.trail.len();
        self.pending_cubes.clear();
    }

    /// Conflict, forced existential, or nothing, for a clause with no true literal.
    fn eval_clause(&self, ci: usize) -> Option<Result<Literal, ()>> {
        let mut unit = None;
        let mut min_univ = u32::MAX;
        for &l in &self.clauses[ci].lits {
            match self.lit_value(l) {
                1 => return None,
                -1 => {}
                _ if self.is_universal(l) => min_univ = min_univ.min(self.qlev(l)),
                _ if unit.is_some() => return None,
                _ => unit = Some(l),
            }
        }
        match unit {
            None => Some(Err(())),
            Some(e) if min_univ > self.qlev(e) => Some(Ok(e)),
            Some(_) => None,
        }
    }

    /// Satisfied, forced universal (as the literal to make true), or nothing.
    fn eval_cube(&self, ki: usize) -> Option<Result<Literal, ()>> {
        let mut unit = None;
        let mut min_exist = u32::MAX;
        for &l in &self.cubes[ki].lits {
            match self.lit_value(l) {
                -1 => return None,
                1 => {}
                _ if !self.is_universal(l) => min_exist = min_exist.min(self.qlev(l)),
                _ if unit.is_some() => return None,
                _ => unit = Some(l),
            }
        }
        match unit {
            None => Some(Err(())),
            Some(u) if min_exist > self.qlev(u) => Some(Ok(!u)),
            Some(_) => None,
        }
    }

    fn check_limits(&self) -> Option<UnknownReason> {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Some(UnknownReason::Timeout);
        }
        if self.mem_limit.is_some_and(|m| self.mem_bytes > m) {
            return Some(UnknownReason::Memout);
        }
        None
    }

    fn propagate_inner(&mut self) -> Result<Option<Event>, UnknownReason> {
        loop {
            while self.qhead < self.trail.len() {
                let p = self.trail[self.qhead];
                self.qhead += 1;
                self.stats.propagations += 1;
                if self.stats.propagations.is_multiple_of(self.config.check_interval.max(1)) {
                    if let Some(r) = self.check_limits() {
                        return Err(r);
                    }
                }
                for i in 0..self.occ_clause[(!p).index()].len() {
                    let ci = self.occ_clause[(!p).index()][i];
                    if self.true_count[ci] != 0 {
                        continue;
                    }
                    match self.eval_clause(ci) {
                        Some(Err(())) => return Ok(Some(Event::Conflict(ci))),
                        Some(Ok(e)) => self.assign(e, Reason::Clause(ci)),
                        None => {}
                    }
                }
                for i in 0..self.occ_cube[p.index()].len() {
                    let ki = self.occ_cube[p.index()][i];
                    if self.false_count[ki] == 0 {
                        self.pending_cubes.push(ki);
                    }
                }
            }
            if self.unsat_original == 0 {
                return Ok(Some(Event::Cover));
            }
            let mut progressed = false;
            while let Some(ki) = self.pending_cubes.pop() {
                if self.false_count[ki] != 0 {
                    continue;
                }
                match self.eval_cube(ki) {
                    Some(Err(())) => return Ok(Some(Event::CubeSatisfied(ki))),
                    Some(Ok(l)) => {
                        self.assign_isolated(l, Reason::Cube(ki));
                        progressed = true;
                        break;
                    }
                    None => {}
                }
            }
            if progressed {
                continue;
            }
            if self.config.pure_literals {
                if let Some(l) = self.find_pure() {
                    self.assign_isolated(l, Reason::Pure);
                    continue;
                }
            }
            return Ok(None);
        }
    }

    /// An existential literal whose complement occurs in no open clause and
    /// no live cube, or a universal literal occurring in neither.
    fn find_pure(&self) -> Option<Literal> {
        for v in 1..=self.num_vars as u32 {
            if self.value[v as usize] != 0 || self.qlevel[v as usize] == 0 {
                continue;
            }
            for positive in [true, false] {
                let l = Literal::new(v, positive);
                let blocking = if self.universal[v as usize] { l } else { !l };
                let in_clause = self.occ_clause[blocking.index()].iter().any(|&ci| self.true_count[ci] == 0);
                let in_cube = self.occ_cube[blocking.index()].iter().any(|&ki| self.false_count[ki] == 0);
                if !in_clause && !in_cube {
                    return Some(l);
                }
            }
        }
        None
    }

    /// Closes the current assignment under propagation.
    pub fn propagate(&mut self) -> Propagation {
        match self.propagate_inner() {
            Ok(Some(Event::Conflict(ci))) => Propagation::Conflict(self.clauses[ci].lits.clone()),
            Ok(Some(_)) => Propagation::Solution,
            _ => Propagation::Open,
        }
    }

    fn step_of(&mut self, side: Side, idx: usize) -> Option<u32> {
        let rec = self.recorder.as_mut()?;
        match side {
            Side::Cube => self.cubes[idx].step,
            Side::Clause => {
                if let Some(s) = self.clauses[idx].step {
                    return Some(s);
                }
                let orig = self.clauses[idx].original.expect("learned clauses carry their step");
                let input = self.input[orig].sorted().into_lits();
                let mut id = rec.push_input_clause(orig, input.clone());
                if input != self.clauses[idx].lits {
                    id = rec.push(StepKind::UniversalReduction, vec![id], None, self.clauses[idx].lits.clone());
                }
                self.mem_bytes += input.len() * 8 + 64;
                self.clauses[idx].step = Some(id);
                Some(id)
            }
        }
    }

    fn record(&mut self, kind: StepKind, ants: Vec<Option<u32>>, pivot: Option<u32>, lits: &[Literal]) -> Option<u32> {
        let rec = self.recorder.as_mut()?;
        let ants = ants.into_iter().map(|a| a.expect("antecedent recorded")).collect();
        self.mem_bytes += lits.len() * 4 + 48;
        Some(rec.push(kind, ants, pivot, lits.to_vec()))
    }

    fn reduce(&self, side: Side, lits: &[Literal]) -> Vec<Literal> {
        let max_primary = lits
            .iter()
            .filter(|&&l| side.is_primary(self.is_universal(l)))
            .map(|&l| self.qlev(l))
            .max()
            .unwrap_or(0);
        lits.iter()
            .copied()
            .filter(|&l| side.is_primary(self.is_universal(l)) || self.qlev(l) < max_primary)
            .collect()
    }

    /// Highest level of a primary literal, if the working constraint is in
    /// the expected state relative to that level.
    fn view_level(&self, side: Side, lits: &[Literal]) -> Result<Option<usize>, Stuck> {
        let mut d = None;
        for &l in lits {
            if side.is_primary(self.is_universal(l)) {
                if self.lit_value(l) == 0 {
                    return Err(Stuck);
                }
                d = Some(d.map_or(self.lvl(l), |x: usize| x.max(self.lvl(l))));
            }
        }
        let Some(d) = d else { return Ok(None) };
        for &l in lits {
            let val = self.lit_value(l);
            if val != 0 && self.lvl(l) <= d && val != side.working_value() {
                return Err(Stuck);
            }
        }
        Ok(Some(d))
    }

    fn same_side_reason(&self, side: Side, l: Literal) -> Option<usize> {
        match (side, self.reason[l.var() as usize]) {
            (Side::Clause, Reason::Clause(r)) | (Side::Cube, Reason::Cube(r)) => Some(r),
            _ => None,
        }
    }

    fn constraint(&self, side: Side, idx: usize) -> &[Literal] {
        match side {
            Side::Clause => &self.clauses[idx].lits,
            Side::Cube => &self.cubes[idx].lits,
        }
    }

    /// Backjump level at which `lits` becomes unit on `lam`.
    fn asserting_level(&self, side: Side, lits: &[Literal], lam: Literal, d: usize) -> Option<usize> {
        if let Some(r) = self.same_side_reason(side, lam) {
            let top = self
                .constraint(side, r)
                .iter()
                .filter(|l| l.var() != lam.var() && self.lit_value(**l) != 0)
                .map(|&l| self.lvl(l))
                .max();
            if top != Some(d) {
                return None;
            }
        }
        let mut b = 0;
        for &l in lits {
            if l == lam {
                continue;
            }
            if side.is_primary(self.is_universal(l)) {
                b = b.max(self.lvl(l));
            } else if self.qlev(l) < self.qlev(lam) {
                if self.lit_value(l) == 0 || self.lvl(l) >= d {
                    return None;
                }
                b = b.max(self.lvl(l));
            }
        }
        (b < d).then_some(b)
    }

    fn analyze(&mut self, side: Side, mut lits: Vec<Literal>, mut step: Option<u32>) -> Result<Learned, Stuck> {
        lits.sort_unstable();
        lits.dedup();
        loop {
            let reduced = self.reduce(side, &lits);
            if reduced.len() != lits.len() {
                let kind = match side {
                    Side::Clause => StepKind::UniversalReduction,
                    Side::Cube => StepKind::ExistentialReduction,
                };
                step = self.record(kind, vec![step], None, &reduced);
                lits = reduced;
            }
            let Some(d) = self.view_level(side, &lits)? else {
                debug_assert!(lits.is_empty());
                return Ok(Learned::Empty(step));
            };
            let at_d: Vec<Literal> = lits
                .iter()
                .copied()
                .filter(|&l| side.is_primary(self.is_universal(l)) && self.lvl(l) == d)
                .collect();
            if let [lam] = at_d[..] {
                if let Some(b) = self.asserting_level(side, &lits, lam, d) {
                    return Ok(Learned::Asserting { lits, step, lit: lam, level: b });
                }
            }
            let mut candidates: Vec<(bool, u32, usize, Literal, usize)> = lits
                .iter()
                .filter(|&&l| side.is_primary(self.is_universal(l)))
                .filter_map(|&l| {
                    self.same_side_reason(side, l)
                        .map(|r| (self.lvl(l) == d, self.qlev(l), self.pos[l.var() as usize], l, r))
                })
                .collect();
            // current level first, then outermost-last quantifier level, then latest on the trail
            candidates.sort_unstable_by_key(|c| std::cmp::Reverse((c.0, c.1, c.2)));
            let mut advanced = false;
            for &(_, _, _, l, r) in &candidates {
                let Ok(res) = raw_resolvent(&lits, self.constraint(side, r), l.var()) else { continue };
                let reduced = self.reduce(side, &res);
                if self.view_level(side, &reduced).is_err() {
                    continue;
                }
                let r_step = self.step_of(side, r);
                let kind = match side {
                    Side::Clause => StepKind::Resolution,
                    Side::Cube => StepKind::CubeResolution,
                };
                step = self.record(kind, vec![step, r_step], Some(l.var()), &res);
                lits = res;
                for &x in &lits {
                    self.bump(x.var() as usize);
                }
                advanced = true;
                break;
            }
            if !advanced {
                return Err(Stuck);
            }
        }
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }

    fn cover(&self) -> Vec<Literal> {
        let mut out: Vec<Literal> = self
            .clauses
            .iter()
            .filter(|c| c.original.is_some())
            .map(|c| {
                *c.lits
                    .iter()
                    .filter(|&&l| self.lit_value(l) == 1)
                    .min_by_key(|l| self.pos[l.var() as usize])
                    .expect("satisfied clause")
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn decide(&mut self) -> bool {
        for block in &self.blocks {
            let best = block
                .iter()
                .copied()
                .filter(|&v| self.value[v as usize] == 0)
                .max_by(|&a, &b| self.activity[a as usize].total_cmp(&self.activity[b as usize]).then(b.cmp(&a)));
            if let Some(v) = best {
                let l = Literal::new(v, self.phase[v as usize]);
                self.stats.decisions += 1;
                self.new_level();
                self.assign(l, Reason::Decision { flipped: false });
                return true;
            }
        }
        false
    }

    fn learn(&mut self, side: Side, learned: Learned) -> Option<Status> {
        match learned {
            Learned::Empty(step) => {
                let (status, kind) = match side {
                    Side::Clause => (Status::Unsat, ProofKind::Refutation),
                    Side::Cube => (Status::Sat, ProofKind::Satisfaction),
                };
                if let (Some(rec), Some(root)) = (&self.recorder, step) {
                    self.proof = Some(rec.proof(root, kind, self.max_var));
                }
                Some(status)
            }
            Learned::Asserting { lits, step, lit, level } => {
                trace!("learned {side:?} {lits:?}, backjump to {level}");
                self.backtrack(level);
                let idx = self.add_constraint(side, lits, step, None);
                match side {
                    Side::Clause => {
                        self.stats.learned_clauses += 1;
                        debug_assert_eq!(self.eval_clause(idx), Some(Ok(lit)));
                        self.assign(lit, Reason::Clause(idx));
                    }
                    Side::Cube => {
                        self.stats.learned_cubes += 1;
                        debug_assert_eq!(self.eval_cube(idx), Some(Ok(!lit)));
                        self.assign_isolated(!lit, Reason::Cube(idx));
                    }
                }
                self.var_inc /= self.config.decay;
                None
            }
        }
    }

    /// Undoes to the latest unflipped decision of the given kind and flips it.
    fn flip_chronological(&mut self, universal: bool) -> bool {
        for lvl in (1..=self.decision_level()).rev() {
            let start = self.trail_lim[lvl - 1];
            let Some(&l) = self.trail.get(start) else { continue };
            let v = l.var() as usize;
            if self.level[v] == lvl && self.reason[v] == (Reason::Decision { flipped: false }) && self.universal[v] == universal {
                self.backtrack(lvl - 1);
                self.new_level();
                self.assign(!l, Reason::Decision { flipped: true });
                return true;
            }
        }
        false
    }

    fn run(&mut self) -> Stop {
        loop {
            let event = match self.propagate_inner() {
                Err(r) => return Stop::Limit(r),
                Ok(e) => e,
            };
            if let Some(r) = self.check_limits().filter(|_| self.stats.propagations.is_multiple_of(64)) {
                return Stop::Limit(r);
            }
            match event {
                None => {
                    if !self.decide() {
                        // every variable assigned without conflict or solution cannot happen
                        debug_assert!(false, "complete assignment without verdict");
                        return Stop::Stuck;
                    }
                }
                Some(Event::Conflict(ci)) => {
                    self.stats.conflicts += 1;
                    if !self.learning {
                        if !self.flip_chronological(false) {
                            return Stop::Done(Status::Unsat);
                        }
                        continue;
                    }
                    let lits = self.clauses[ci].lits.clone();
                    let step = self.step_of(Side::Clause, ci);
                    match self.analyze(Side::Clause, lits, step) {
                        Err(Stuck) => return Stop::Stuck,
                        Ok(l) => {
                            if let Some(s) = self.learn(Side::Clause, l) {
                                return Stop::Done(s);
                            }
                        }
                    }
                    self.maybe_restart();
                }
                Some(ev) => {
                    self.stats.solutions += 1;
                    if !self.learning {
                        if !self.flip_chronological(true) {
                            return Stop::Done(Status::Sat);
                        }
                        continue;
                    }
                    let (lits, step) = match ev {
                        Event::CubeSatisfied(ki) => (self.cubes[ki].lits.clone(), self.cubes[ki].step),
                        _ => {
                            let cover = self.cover();
                            let step = self.record(StepKind::InputCube, vec![], None, &cover);
                            (cover, step)
                        }
                    };
                    match self.analyze(Side::Cube, lits, step) {
                        Err(Stuck) => return Stop::Stuck,
                        Ok(l) => {
                            if let Some(s) = self.learn(Side::Cube, l) {
                                return Stop::Done(s);
                            }
                        }
                    }
                    self.maybe_restart();
                }
            }
        }
    }

    fn maybe_restart(&mut self) {
        if !self.config.restarts {
            return;
        }
        self.since_restart += 1;
        if self.since_restart as f64 >= self.next_restart {
            self.since_restart = 0;
            self.next_restart *= self.config.restart_factor;
            self.stats.restarts += 1;
            // units learned at level 0 stay; everything else is re-derived
            let keep = usize::from(false);
            self.backtrack(keep);
        }
    }

    fn reset(&mut self) {
        self.backtrack(0);
        let units: Vec<Literal> = self.trail.drain(..).collect();
        for l in units.into_iter().rev() {
            let v = l.var() as usize;
            self.value[v] = 0;
            for i in 0..self.occ_clause[l.index()].len() {
                let ci = self.occ_clause[l.index()][i];
                self.true_count[ci] -= 1;
                if self.true_count[ci] == 0 && self.clauses[ci].original.is_some() {
                    self.unsat_original += 1;
                }
            }
            for &ki in &self.occ_cube[(!l).index()] {
                self.false_count[ki] -= 1;
            }
        }
        self.qhead = 0;
    }

    /// Queues every constraint for an initial check at level 0.
    fn seed_level_zero(&mut self) -> Option<Event> {
        for ci in 0..self.clauses.len() {
            if self.true_count[ci] == 0 {
                match self.eval_clause(ci) {
                    Some(Err(())) => return Some(Event::Conflict(ci)),
                    Some(Ok(e)) if self.lit_value(e) == 0 => self.assign(e, Reason::Clause(ci)),
                    _ => {}
                }
            }
        }
        self.pending_cubes = (0..self.cubes.len()).collect();
        None
    }

    pub fn solve(&mut self, limits: Limits) -> SolveOutcome {
        let started = Instant::now();
        self.deadline = limits.deadline(started);
        self.mem_limit = limits.memory;
        self.proof = None;
        let stop = match self.seed_level_zero() {
            Some(Event::Conflict(ci)) => {
                let lits = self.clauses[ci].lits.clone();
                let step = self.step_of(Side::Clause, ci);
                match self.analyze(Side::Clause, lits, step) {
                    Ok(l) => match self.learn(Side::Clause, l) {
                        Some(s) => Stop::Done(s),
                        None => self.run(),
                    },
                    Err(Stuck) => Stop::Stuck,
                }
            }
            _ => self.run(),
        };
        let stop = match stop {
            Stop::Stuck => {
                debug!("learning failed to find a legal resolution; continuing without learning");
                self.stats.fallbacks += 1;
                self.learning = false;
                self.recorder = None;
                self.proof = None;
                self.reset();
                self.cubes.clear();
                self.false_count.clear();
                for o in &mut self.occ_cube {
                    o.clear();
                }
                self.clauses.retain(|c| c.original.is_some());
                self.true_count.truncate(self.clauses.len());
                for o in &mut self.occ_clause {
                    o.retain(|&ci| ci < self.true_count.len());
                }
                match self.seed_level_zero() {
                    Some(Event::Conflict(_)) => Stop::Done(Status::Unsat),
                    _ => self.run(),
                }
            }
            s => s,
        };
        match stop {
            Stop::Done(s) => SolveOutcome::solved(s, started),
            Stop::Limit(r) => SolveOutcome::unknown(r, started),
            Stop::Stuck => unreachable!("plain search never gets stuck"),
        }
    }
}

/// Solves `f` by search. With `trace` set, the proof of the answer is
/// returned alongside the outcome.
pub fn solve_search(f: &Pcnf, limits: Limits, trace: bool) -> (SolveOutcome, Option<Proof>) {
    let mut s = SearchSolver::new(f, SearchConfig { trace, ..SearchConfig::default() });
    let out = s.solve(limits);
    (out, s.take_proof())
}
