//! Propositional CDCL engine with two watched literals.
//!
//! Used by the expansion solver on the purely existential residue and by
//! certificate validation when exhaustive enumeration is too large.

use std::time::Instant;

use crate::formula::Literal;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// Model indexed by variable id; index 0 is unused.
    Sat(Vec<bool>),
    Unsat,
    /// Budget exhausted.
    Unknown,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SatBudget {
    pub deadline: Option<Instant>,
    pub max_conflicts: Option<u64>,
}

const UNDEF: i8 = 0;

/// Internal literal code: `2*var + negated`.
type Code = usize;

fn code(l: Literal) -> Code {
    l.index()
}

fn neg(c: Code) -> Code {
    c ^ 1
}

pub struct SatSolver {
    num_vars: usize,
    clauses: Vec<Vec<Code>>,
    watches: Vec<Vec<usize>>,
    value: Vec<i8>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Code>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    heap: VarHeap,
    seen: Vec<bool>,
    inconsistent: bool,
    units: Vec<Code>,
    pub conflicts: u64,
}

impl SatSolver {
    pub fn new(num_vars: u32) -> SatSolver {
        let n = num_vars as usize + 1;
        let mut heap = VarHeap::new(n);
        let zeros = vec![0.0; n];
        for v in 1..n {
            heap.insert(v, &zeros);
        }
        SatSolver {
            num_vars: n - 1,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            value: vec![UNDEF; 2 * n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            phase: vec![false; n],
            heap,
            seen: vec![false; n],
            inconsistent: false,
            units: Vec::new(),
            conflicts: 0,
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars as u32
    }

    /// Adds a clause; variables beyond the declared count grow the solver.
    pub fn add_clause(&mut self, lits: &[Literal]) {
        if self.inconsistent {
            return;
        }
        let mut c: Vec<Code> = lits.iter().map(|&l| code(l)).collect();
        if let Some(&m) = c.iter().max() {
            self.grow(m / 2);
        }
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == neg(w[1])) {
            return;
        }
        match c.len() {
            0 => self.inconsistent = true,
            1 => self.units.push(c[0]),
            _ => {
                let idx = self.clauses.len();
                self.watches[neg(c[0])].push(idx);
                self.watches[neg(c[1])].push(idx);
                self.clauses.push(c);
            }
        }
    }

    fn grow(&mut self, var: usize) {
        if var <= self.num_vars {
            return;
        }
        let n = var + 1;
        self.watches.resize(2 * n, Vec::new());
        self.value.resize(2 * n, UNDEF);
        self.level.resize(n, 0);
        self.reason.resize(n, None);
        self.activity.resize(n, 0.0);
        self.phase.resize(n, false);
        self.seen.resize(n, false);
        self.heap.grow(n);
        for v in self.num_vars + 1..n {
            self.heap.insert(v, &self.activity);
        }
        self.num_vars = var;
    }

    fn lit_value(&self, c: Code) -> i8 {
        self.value[c]
    }

    fn assign(&mut self, c: Code, reason: Option<usize>) {
        self.value[c] = 1;
        self.value[neg(c)] = -1;
        let v = c / 2;
        self.level[v] = self.trail_lim.len();
        self.reason[v] = reason;
        self.trail.push(c);
    }

    /// Returns the index of a conflicting clause.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            // clauses watching ¬p's complement, i.e. containing ¬p, are registered under p
            let mut ws = std::mem::take(&mut self.watches[p]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                let false_lit = neg(p);
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.value[first] == 1 {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    if self.value[clause[k]] != -1 {
                        clause.swap(1, k);
                        let w = clause[1];
                        self.watches[neg(w)].push(ci);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if self.value[first] == -1 {
                    conflict = Some(ci);
                    break;
                }
                self.assign(first, Some(ci));
                i += 1;
            }
            self.watches[p].extend(ws);
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.update(v, &self.activity);
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Code>, usize) {
        let mut learnt = vec![0];
        let mut counter = 0;
        let mut idx = self.trail.len();
        let current = self.trail_lim.len();
        let mut p: Option<Code> = None;
        loop {
            let start = usize::from(p.is_some());
            let lits: Vec<Code> = self.clauses[confl][start..].to_vec();
            for q in lits {
                let v = q / 2;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx] / 2] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            self.seen[pl / 2] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = neg(pl);
                break;
            }
            confl = self.reason[pl / 2].expect("implied literal has a reason");
            // reasons keep the implied literal first
            debug_assert_eq!(self.clauses[confl][0], pl);
        }
        for &q in &learnt[1..] {
            self.seen[q / 2] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i] / 2] > self.level[learnt[max_i] / 2] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1] / 2];
        }
        self.var_inc /= 0.95;
        (learnt, bt)
    }

    fn backtrack(&mut self, lvl: usize) {
        if self.trail_lim.len() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl];
        for i in (start..self.trail.len()).rev() {
            let c = self.trail[i];
            let v = c / 2;
            self.phase[v] = c.is_multiple_of(2);
            self.value[c] = UNDEF;
            self.value[neg(c)] = UNDEF;
            self.reason[v] = None;
            if !self.heap.contains(v) {
                self.heap.insert(v, &self.activity);
            }
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl);
        self.qhead = start;
    }

    fn pick_branch(&mut self) -> Option<Code> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.value[2 * v] == UNDEF {
                return Some(2 * v + usize::from(!self.phase[v]));
            }
        }
        None
    }

    pub fn solve(&mut self, budget: SatBudget) -> SatResult {
        if self.inconsistent {
            return SatResult::Unsat;
        }
        self.backtrack(0);
        for c in std::mem::take(&mut self.units) {
            match self.lit_value(c) {
                1 => {}
                -1 => {
                    self.inconsistent = true;
                    return SatResult::Unsat;
                }
                _ => self.assign(c, None),
            }
        }
        let mut restart_limit = 100u64;
        let mut since_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                since_restart += 1;
                if self.trail_lim.is_empty() {
                    self.inconsistent = true;
                    return SatResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.assign(learnt[0], None);
                } else {
                    let idx = self.clauses.len();
                    self.watches[neg(learnt[0])].push(idx);
                    self.watches[neg(learnt[1])].push(idx);
                    let first = learnt[0];
                    self.clauses.push(learnt);
                    self.assign(first, Some(idx));
                }
                if budget.max_conflicts.is_some_and(|m| self.conflicts >= m) {
                    self.backtrack(0);
                    return SatResult::Unknown;
                }
                if self.conflicts.is_multiple_of(256) && budget.deadline.is_some_and(|d| Instant::now() >= d) {
                    self.backtrack(0);
                    return SatResult::Unknown;
                }
            } else {
                if since_restart >= restart_limit {
                    since_restart = 0;
                    restart_limit = restart_limit * 3 / 2;
                    self.backtrack(0);
                    continue;
                }
                match self.pick_branch() {
                    None => {
                        let mut model = vec![false; self.num_vars + 1];
                        for (v, m) in model.iter_mut().enumerate().skip(1) {
                            *m = self.value[2 * v] == 1;
                        }
                        self.backtrack(0);
                        return SatResult::Sat(model);
                    }
                    Some(c) => {
                        self.trail_lim.push(self.trail.len());
                        self.assign(c, None);
                    }
                }
            }
        }
    }
}

/// Max-heap of variables keyed by activity.
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn new(n: usize) -> VarHeap {
        VarHeap { heap: Vec::with_capacity(n), pos: vec![None; n] }
    }

    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v].is_some()
    }

    fn less(a: usize, b: usize, act: &[f64]) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.pos[v] = Some(self.heap.len() - 1);
        self.up(self.heap.len() - 1, act);
    }

    fn update(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("nonempty");
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::less(v, self.heap[parent], act) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i]] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let child = if r < self.heap.len() && Self::less(self.heap[r], self.heap[l], act) { r } else { l };
            if !Self::less(self.heap[child], v, act) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i]] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(v: i32) -> Literal {
        Literal::from_dimacs(v).unwrap()
    }

    fn brute(n: u32, clauses: &[Vec<i32>]) -> bool {
        (0u32..1 << n).any(|m| {
            clauses.iter().all(|c| c.iter().any(|&l| ((m >> (l.unsigned_abs() - 1)) & 1 == 1) == (l > 0)))
        })
    }

    #[test]
    fn small_cases() {
        let mut s = SatSolver::new(2);
        s.add_clause(&[lit(1)]);
        s.add_clause(&[lit(-1), lit(2)]);
        assert_eq!(s.solve(SatBudget::default()), SatResult::Sat(vec![false, true, true]));
        let mut u = SatSolver::new(1);
        u.add_clause(&[lit(1)]);
        u.add_clause(&[lit(-1)]);
        assert_eq!(u.solve(SatBudget::default()), SatResult::Unsat);
        let mut e = SatSolver::new(0);
        e.add_clause(&[]);
        assert_eq!(e.solve(SatBudget::default()), SatResult::Unsat);
    }

    #[test]
    fn pigeonhole_4_3_is_unsat() {
        let p = |i: i32, j: i32| lit(i * 3 + j + 1);
        let mut s = SatSolver::new(12);
        for i in 0..4 {
            s.add_clause(&[p(i, 0), p(i, 1), p(i, 2)]);
        }
        for j in 0..3 {
            for a in 0..4 {
                for b in a + 1..4 {
                    s.add_clause(&[!p(a, j), !p(b, j)]);
                }
            }
        }
        assert_eq!(s.solve(SatBudget::default()), SatResult::Unsat);
    }

    proptest! {
        #[test]
        fn agrees_with_truth_table(
            clauses in prop::collection::vec(prop::collection::vec((1i32..=7, any::<bool>()), 1..4), 0..40)
        ) {
            let cls: Vec<Vec<i32>> = clauses.iter().map(|c| c.iter().map(|&(v, s)| if s { v } else { -v }).collect()).collect();
            let mut s = SatSolver::new(7);
            for c in &cls {
                s.add_clause(&c.iter().map(|&l| lit(l)).collect::<Vec<_>>());
            }
            match s.solve(SatBudget::default()) {
                SatResult::Sat(m) => {
                    prop_assert!(cls.iter().all(|c| c.iter().any(|&l| m[l.unsigned_abs() as usize] == (l > 0))));
                }
                SatResult::Unsat => prop_assert!(!brute(7, &cls)),
                SatResult::Unknown => prop_assert!(false),
            }
        }
    }
}
