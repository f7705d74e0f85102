use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Clause, Literal, Pcnf, Prefix, QuantifierBlock, Scope};

/// Mutable clause database the techniques rewrite in place.
#[derive(Clone, Debug)]
pub(crate) struct Work {
    pub prefix: Prefix,
    pub scope: Scope,
    pub clauses: Vec<Vec<Literal>>,
    pub max_var: u32,
    pub unsat: bool,
}

fn tautology(c: &[Literal]) -> bool {
    c.windows(2).any(|w| w[0] == !w[1])
}

impl Work {
    pub fn new(f: &Pcnf) -> Work {
        let mut clauses: Vec<Vec<Literal>> = Vec::with_capacity(f.clauses().len());
        for c in f.clauses() {
            let c = c.sorted().into_lits();
            if !tautology(&c) {
                clauses.push(c);
            }
        }
        let unsat = clauses.iter().any(Vec::is_empty);
        Work { prefix: f.prefix().clone(), scope: f.scope(), clauses, max_var: f.max_var(), unsat }
    }

    pub fn to_pcnf(&self) -> Pcnf {
        let clauses = self.clauses.iter().map(|c| Clause::new(c.clone())).collect();
        Pcnf::new(self.prefix.clone(), clauses).expect("techniques keep every variable bound").with_max_var(self.max_var)
    }

    /// Clauses + literals + occurring variables; strictly decreasing across
    /// productive fixpoint iterations.
    pub fn measure(&self) -> usize {
        let vars: BTreeSet<u32> = self.clauses.iter().flatten().map(|l| l.var()).collect();
        self.clauses.len() + self.clauses.iter().map(Vec::len).sum::<usize>() + vars.len()
    }

    fn level(&self, v: u32) -> u32 {
        self.scope.level(v)
    }

    fn universal(&self, l: Literal) -> bool {
        self.scope.is_universal(l.var())
    }

    fn occurrences(&self) -> Vec<Vec<usize>> {
        let mut occ = vec![Vec::new(); 2 * self.max_var as usize + 2];
        for (i, c) in self.clauses.iter().enumerate() {
            for l in c {
                occ[l.index()].push(i);
            }
        }
        occ
    }

    fn reduced(&self, c: &[Literal]) -> Vec<Literal> {
        let max_e = c.iter().filter(|l| !self.universal(**l)).map(|l| self.level(l.var())).max().unwrap_or(0);
        c.iter().copied().filter(|l| !self.universal(*l) || self.level(l.var()) < max_e).collect()
    }

    /// Applies a partial assignment: satisfied clauses go, falsified literals go.
    fn assign(&mut self, values: &BTreeMap<u32, bool>) {
        let holds = |l: &Literal| values.get(&l.var()).map(|&v| v == l.is_positive());
        self.clauses.retain(|c| !c.iter().any(|l| holds(l) == Some(true)));
        for c in &mut self.clauses {
            c.retain(|l| holds(l).is_none());
            if c.is_empty() {
                self.unsat = true;
            }
        }
    }

    pub fn universal_reduction(&mut self) -> usize {
        let mut n = 0;
        for i in 0..self.clauses.len() {
            let r = self.reduced(&self.clauses[i]);
            if r.len() != self.clauses[i].len() {
                n += 1;
                self.unsat |= r.is_empty();
                self.clauses[i] = r;
            }
        }
        n
    }

    /// Existential units after reduction are assigned; a clause that reduces
    /// to nothing is a conflict.
    pub fn unit(&mut self) -> usize {
        let mut n = 0;
        while !self.unsat {
            let mut values = BTreeMap::new();
            for c in &self.clauses {
                let r = self.reduced(c);
                match r[..] {
                    [] => self.unsat = true,
                    [e]
                        if values.insert(e.var(), e.is_positive()) == Some(!e.is_positive()) => {
                            self.unsat = true;
                        }
                    _ => {}
                }
            }
            if self.unsat || values.is_empty() {
                break;
            }
            n += values.len();
            self.assign(&values);
        }
        n
    }

    /// Pure existentials are satisfied, pure universals falsified.
    pub fn pure(&mut self) -> usize {
        let mut n = 0;
        while !self.unsat {
            let occ = self.occurrences();
            let mut values = BTreeMap::new();
            for v in 1..=self.max_var {
                let (p, q) = (Literal::new(v, true), Literal::new(v, false));
                let (np, nq) = (occ[p.index()].len(), occ[q.index()].len());
                if (np == 0) == (nq == 0) {
                    continue;
                }
                let lit = if np > 0 { p } else { q };
                let value = if self.universal(lit) { !lit.is_positive() } else { lit.is_positive() };
                values.insert(v, value);
            }
            if values.is_empty() {
                break;
            }
            n += values.len();
            self.assign(&values);
        }
        n
    }

    /// Drops clauses that contain another clause, duplicates included.
    pub fn subsumption(&mut self) -> usize {
        let mut order: Vec<usize> = (0..self.clauses.len()).collect();
        order.sort_by_key(|&i| (self.clauses[i].len(), i));
        let mut kept_occ: Vec<Vec<usize>> = vec![Vec::new(); 2 * self.max_var as usize + 2];
        let mut keep = vec![false; self.clauses.len()];
        for &i in &order {
            let c = &self.clauses[i];
            let subsumed = c.iter().any(|l| {
                kept_occ[l.index()].iter().any(|&j| self.clauses[j].iter().all(|x| c.binary_search(x).is_ok()))
            });
            if !subsumed {
                keep[i] = true;
                for l in c {
                    kept_occ[l.index()].push(i);
                }
            }
        }
        let before = self.clauses.len();
        let mut k = keep.into_iter();
        self.clauses.retain(|_| k.next().unwrap_or(true));
        before - self.clauses.len()
    }

    /// Removes clauses blocked on an existential literal: every resolvent on
    /// it clashes on a variable bound no deeper than the blocking literal.
    pub fn blocked_clause_elim(&mut self) -> usize {
        let occ = self.occurrences();
        let mut removed = vec![false; self.clauses.len()];
        let mut n = 0;
        loop {
            let mut changed = false;
            for i in 0..self.clauses.len() {
                if removed[i] {
                    continue;
                }
                let c = &self.clauses[i];
                let blocked = c.iter().filter(|l| !self.universal(**l)).any(|&l| {
                    occ[(!l).index()].iter().filter(|&&j| !removed[j]).all(|&j| {
                        let d = &self.clauses[j];
                        c.iter().any(|&x| x != l && self.level(x.var()) <= self.level(l.var()) && d.binary_search(&!x).is_ok())
                    })
                });
                if blocked {
                    removed[i] = true;
                    changed = true;
                    n += 1;
                }
            }
            if !changed {
                break;
            }
        }
        let mut r = removed.into_iter();
        self.clauses.retain(|_| !r.next().unwrap_or(false));
        n
    }

    /// True when `v` may be resolved away: existential, and nothing bound
    /// deeper than `v` shares a clause with it.
    pub fn eliminable(&self, v: u32) -> bool {
        if !self.scope.is_existential(v) {
            return false;
        }
        let lv = self.level(v);
        self.clauses
            .iter()
            .filter(|c| c.iter().any(|l| l.var() == v))
            .all(|c| c.iter().all(|l| self.level(l.var()) <= lv))
    }

    /// Replaces the clauses of `v` by their non-tautological resolvents when
    /// that adds at most `growth` clauses.
    pub fn eliminate(&mut self, v: u32, growth: usize) -> bool {
        let (pos, neg): (Vec<usize>, Vec<usize>) = {
            let p = Literal::new(v, true);
            let idx: Vec<usize> = (0..self.clauses.len()).filter(|&i| self.clauses[i].iter().any(|l| l.var() == v)).collect();
            idx.into_iter().partition(|&i| self.clauses[i].contains(&p))
        };
        if pos.is_empty() && neg.is_empty() {
            return false;
        }
        let mut resolvents = Vec::new();
        for &i in &pos {
            for &j in &neg {
                let mut r: Vec<Literal> =
                    self.clauses[i].iter().chain(&self.clauses[j]).copied().filter(|l| l.var() != v).collect();
                r.sort_unstable();
                r.dedup();
                if tautology(&r) {
                    continue;
                }
                resolvents.push(self.reduced(&r));
                if resolvents.len() > pos.len() + neg.len() + growth {
                    return false;
                }
            }
        }
        let gone: BTreeSet<usize> = pos.into_iter().chain(neg).collect();
        let mut i = 0;
        self.clauses.retain(|_| {
            i += 1;
            !gone.contains(&(i - 1))
        });
        self.unsat |= resolvents.iter().any(Vec::is_empty);
        self.clauses.extend(resolvents);
        true
    }

    pub fn var_elim(&mut self, growth: usize) -> usize {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for l in self.clauses.iter().flatten() {
            *counts.entry(l.var()).or_default() += 1;
        }
        let mut order: Vec<(usize, u32)> = counts.into_iter().map(|(v, c)| (c, v)).collect();
        order.sort_unstable();
        let mut n = 0;
        for (_, v) in order {
            if self.unsat {
                break;
            }
            if self.eliminable(v) && self.eliminate(v, growth) {
                n += 1;
            }
        }
        n
    }

    /// Universals of the innermost universal level, occurring ones first.
    pub fn innermost_universals(&self) -> Vec<u32> {
        let Some(top) = self.prefix.vars().filter(|&v| self.scope.is_universal(v)).map(|v| self.level(v)).max() else {
            return Vec::new();
        };
        let occurring: BTreeSet<u32> = self.clauses.iter().flatten().map(|l| l.var()).collect();
        let mut us: Vec<u32> = self.prefix.vars().filter(|&v| self.scope.is_universal(v) && self.level(v) == top).collect();
        us.sort_by_key(|v| (!occurring.contains(v), *v));
        us
    }

    /// Expands `u` into a copy for each value, renaming the existentials bound
    /// inside it in the `u = false` copy. No-op when the matrix would exceed
    /// its current size plus `growth` clauses.
    pub fn expand(&mut self, u: u32, growth: usize) -> bool {
        let lu = self.level(u);
        if !self.clauses.iter().flatten().any(|l| l.var() == u) {
            self.prefix = self.prefix.retain(|v| v != u);
            return true;
        }
        let inner: BTreeSet<u32> =
            self.clauses.iter().flatten().map(|l| l.var()).filter(|&v| self.level(v) > lu).collect();
        let mut rename: BTreeMap<u32, u32> = BTreeMap::new();
        for (k, &v) in inner.iter().enumerate() {
            rename.insert(v, self.max_var + 1 + k as u32);
        }
        let mut out: BTreeSet<Vec<Literal>> = BTreeSet::new();
        for c in &self.clauses {
            let copied = c.iter().any(|l| l.var() == u || inner.contains(&l.var()));
            if !copied {
                out.insert(c.clone());
                continue;
            }
            for value in [true, false] {
                if c.iter().any(|l| l.var() == u && l.is_positive() == value) {
                    continue;
                }
                let mut r: Vec<Literal> = c
                    .iter()
                    .filter(|l| l.var() != u)
                    .map(|&l| match rename.get(&l.var()) {
                        Some(&w) if !value => Literal::new(w, l.is_positive()),
                        _ => l,
                    })
                    .collect();
                r.sort_unstable();
                out.insert(r);
            }
            if out.len() > self.clauses.len() + growth {
                return false;
            }
        }
        let blocks = self
            .prefix
            .blocks()
            .iter()
            .map(|b| {
                let mut vars: Vec<u32> = b.vars.iter().copied().filter(|&v| v != u).collect();
                vars.extend(b.vars.iter().filter_map(|v| rename.get(v)));
                QuantifierBlock::new(b.quantifier, vars)
            })
            .collect();
        self.max_var += rename.len() as u32;
        self.prefix = Prefix::new(blocks);
        self.scope = Scope::new(&self.prefix, self.max_var);
        self.clauses = out.into_iter().collect();
        self.unsat |= self.clauses.iter().any(Vec::is_empty);
        true
    }

    pub fn universal_expansion(&mut self, growth: usize) -> usize {
        match self.innermost_universals().first() {
            Some(&u) if self.expand(u, growth) => 1,
            _ => 0,
        }
    }
}
