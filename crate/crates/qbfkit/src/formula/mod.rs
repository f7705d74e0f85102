//! Prenex CNF formulas: literals, quantifier prefixes, clauses and statistics.
//!
//! A [`Pcnf`] keeps its prefix blocks as constructed. Most algorithms work on
//! the merged view exposed by [`Scope`], where adjacent blocks with the same
//! quantifier collapse into one level.

mod normalize;
mod qdimacs;

use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normalize::{canonical_digest, canonical_digest_with, canonical_text, normalize, CanonicalDigest, DigestAlgorithm};
pub use qdimacs::{parse_qdimacs, parse_qdimacs_with, write_qdimacs, ParseError, ParseErrorKind, ParseOptions};

/// A literal in DIMACS encoding: a nonzero integer whose sign is the polarity.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal(i32);

impl Literal {
    /// Panics if `var` is 0 or does not fit the DIMACS range.
    pub fn new(var: u32, positive: bool) -> Literal {
        assert!(var >= 1 && var <= i32::MAX as u32, "variable id out of range: {var}");
        let v = var as i32;
        Literal(if positive { v } else { -v })
    }

    pub fn from_dimacs(value: i32) -> Option<Literal> {
        (value != 0 && value != i32::MIN).then_some(Literal(value))
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    /// Dense index `2*var + sign`, handy for per-literal tables.
    pub fn index(self) -> usize {
        2 * self.var() as usize + usize::from(!self.is_positive())
    }
}

impl Not for Literal {
    type Output = Literal;
    fn not(self) -> Literal {
        Literal(-self.0)
    }
}

impl Ord for Literal {
    /// Orders by variable, then negative before positive.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.var(), self.is_positive()).cmp(&(other.var(), other.is_positive()))
    }
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn dual(self) -> Quantifier {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Quantifier::Exists => 'e',
            Quantifier::Forall => 'a',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuantifierBlock {
    pub quantifier: Quantifier,
    pub vars: Vec<u32>,
}

impl QuantifierBlock {
    pub fn new(quantifier: Quantifier, vars: Vec<u32>) -> QuantifierBlock {
        QuantifierBlock { quantifier, vars }
    }
}

/// Ordered list of quantifier blocks, outermost first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Prefix {
    blocks: Vec<QuantifierBlock>,
}

impl Prefix {
    /// Empty blocks are dropped; nothing else is changed.
    pub fn new(blocks: Vec<QuantifierBlock>) -> Prefix {
        Prefix {
            blocks: blocks.into_iter().filter(|b| !b.vars.is_empty()).collect(),
        }
    }

    pub fn blocks(&self) -> &[QuantifierBlock] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().flat_map(|b| b.vars.iter().copied())
    }

    pub fn num_vars(&self) -> usize {
        self.blocks.iter().map(|b| b.vars.len()).sum()
    }

    /// Adjacent same-quantifier blocks merged, variable order kept.
    pub fn merged(&self) -> Prefix {
        let mut out: Vec<QuantifierBlock> = Vec::new();
        for b in &self.blocks {
            match out.last_mut() {
                Some(last) if last.quantifier == b.quantifier => last.vars.extend(&b.vars),
                _ => out.push(b.clone()),
            }
        }
        Prefix { blocks: out }
    }

    /// Merged with variables sorted inside each block.
    pub fn canonical(&self) -> Prefix {
        let mut p = self.merged();
        for b in &mut p.blocks {
            b.vars.sort_unstable();
        }
        p
    }

    /// Keeps only variables accepted by `keep`, dropping blocks that become empty.
    pub fn retain(&self, mut keep: impl FnMut(u32) -> bool) -> Prefix {
        Prefix::new(
            self.blocks
                .iter()
                .map(|b| QuantifierBlock::new(b.quantifier, b.vars.iter().copied().filter(|&v| keep(v)).collect()))
                .collect(),
        )
    }
}

/// Per-variable quantifier and merged block level (1-based), indexed by variable id.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    quant: Vec<Option<Quantifier>>,
    level: Vec<u32>,
    num_levels: u32,
}

impl Scope {
    pub fn new(prefix: &Prefix, max_var: u32) -> Scope {
        let mut quant = vec![None; max_var as usize + 1];
        let mut level = vec![0; max_var as usize + 1];
        let mut current = 0u32;
        let mut last: Option<Quantifier> = None;
        for b in prefix.blocks() {
            if last != Some(b.quantifier) {
                current += 1;
                last = Some(b.quantifier);
            }
            for &v in &b.vars {
                let i = v as usize;
                if i >= quant.len() {
                    quant.resize(i + 1, None);
                    level.resize(i + 1, 0);
                }
                quant[i] = Some(b.quantifier);
                level[i] = current;
            }
        }
        Scope { quant, level, num_levels: current }
    }

    pub fn quantifier(&self, var: u32) -> Option<Quantifier> {
        self.quant.get(var as usize).copied().flatten()
    }

    pub fn is_universal(&self, var: u32) -> bool {
        self.quantifier(var) == Some(Quantifier::Forall)
    }

    pub fn is_existential(&self, var: u32) -> bool {
        self.quantifier(var) == Some(Quantifier::Exists)
    }

    /// Merged block level, 0 for unbound variables.
    pub fn level(&self, var: u32) -> u32 {
        self.level.get(var as usize).copied().unwrap_or(0)
    }

    pub fn num_levels(&self) -> u32 {
        self.num_levels
    }

    pub fn max_var(&self) -> u32 {
        (self.quant.len() - 1) as u32
    }
}

/// A disjunction of literals (or, on the cube side, a conjunction).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    lits: Vec<Literal>,
}

impl Clause {
    pub fn new(lits: Vec<Literal>) -> Clause {
        Clause { lits }
    }

    pub fn from_dimacs(values: &[i32]) -> Clause {
        Clause::new(values.iter().map(|&v| Literal::from_dimacs(v).expect("nonzero literal")).collect())
    }

    pub fn lits(&self) -> &[Literal] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn contains(&self, lit: Literal) -> bool {
        self.lits.contains(&lit)
    }

    pub fn is_tautology(&self) -> bool {
        let mut sorted = self.lits.clone();
        sorted.sort_unstable();
        sorted.windows(2).any(|w| w[0] == !w[1])
    }

    /// Sorted, deduplicated copy.
    pub fn sorted(&self) -> Clause {
        let mut lits = self.lits.clone();
        lits.sort_unstable();
        lits.dedup();
        Clause { lits }
    }

    pub fn into_lits(self) -> Vec<Literal> {
        self.lits
    }
}

impl FromIterator<Literal> for Clause {
    fn from_iter<I: IntoIterator<Item = Literal>>(iter: I) -> Clause {
        Clause::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("variable {0} is quantified more than once")]
    DuplicateBinding(u32),
    #[error("variable {0} occurs in the matrix but is not quantified")]
    Unbound(u32),
}

/// A quantified formula in prenex conjunctive normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Pcnf {
    prefix: Prefix,
    clauses: Vec<Clause>,
    max_var: u32,
}

impl Pcnf {
    /// Checks that every matrix variable is bound exactly once.
    pub fn new(prefix: Prefix, clauses: Vec<Clause>) -> Result<Pcnf, FormulaError> {
        let mut max_var = prefix.vars().max().unwrap_or(0);
        for c in &clauses {
            for l in c.lits() {
                max_var = max_var.max(l.var());
            }
        }
        let mut bound = vec![false; max_var as usize + 1];
        for v in prefix.vars() {
            if std::mem::replace(&mut bound[v as usize], true) {
                return Err(FormulaError::DuplicateBinding(v));
            }
        }
        for c in &clauses {
            for l in c.lits() {
                if !bound[l.var() as usize] {
                    return Err(FormulaError::Unbound(l.var()));
                }
            }
        }
        Ok(Pcnf { prefix, clauses, max_var })
    }

    /// Raises the declared variable bound; never lowers it.
    pub fn with_max_var(mut self, max_var: u32) -> Pcnf {
        self.max_var = self.max_var.max(max_var);
        self
    }

    /// Internal constructor for transformations that preserve binding.
    pub(crate) fn from_parts(prefix: Prefix, clauses: Vec<Clause>, max_var: u32) -> Pcnf {
        debug_assert!(Pcnf::new(prefix.clone(), clauses.clone()).is_ok());
        Pcnf { prefix, clauses, max_var }
    }

    pub fn prefix(&self) -> &Prefix {
        &self.prefix
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn max_var(&self) -> u32 {
        self.max_var
    }

    pub fn scope(&self) -> Scope {
        Scope::new(&self.prefix, self.max_var)
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    pub fn num_literals(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }
}

/// Syntactic size measures of a formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaStats {
    pub num_vars: usize,
    pub num_clauses: usize,
    /// Quantifier blocks after merging adjacent blocks of the same kind.
    pub num_blocks: usize,
    pub num_existential: usize,
    pub num_universal: usize,
}

pub fn compute_stats(f: &Pcnf) -> FormulaStats {
    let merged = f.prefix.merged();
    let count = |q| merged.blocks().iter().filter(|b| b.quantifier == q).map(|b| b.vars.len()).sum();
    let num_existential = count(Quantifier::Exists);
    let num_universal = count(Quantifier::Forall);
    FormulaStats {
        num_vars: num_existential + num_universal,
        num_clauses: f.clauses.len(),
        num_blocks: merged.blocks().len(),
        num_existential,
        num_universal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(q: Quantifier, vars: &[u32]) -> QuantifierBlock {
        QuantifierBlock::new(q, vars.to_vec())
    }

    #[test]
    fn literal_order_and_negation() {
        let a = Literal::new(2, true);
        assert_eq!(!!a, a);
        assert!(Literal::new(1, true) < Literal::new(2, false));
        assert!(Literal::new(2, false) < Literal::new(2, true));
        assert_eq!(Literal::from_dimacs(0), None);
    }

    #[test]
    fn stats_count_merged_blocks() {
        use Quantifier::*;
        let p = Prefix::new(vec![block(Exists, &[1]), block(Exists, &[2]), block(Forall, &[3])]);
        let f = Pcnf::new(p, vec![]).unwrap();
        let s = compute_stats(&f);
        assert_eq!(s.num_blocks, 2);
        assert_eq!((s.num_existential, s.num_universal, s.num_vars), (2, 1, 3));

        let g = Pcnf::new(Prefix::new(vec![block(Forall, &[1]), block(Exists, &[2])]), vec![]).unwrap();
        assert_eq!(compute_stats(&g).num_blocks, 2);
        assert_eq!(compute_stats(&Pcnf::default()), FormulaStats::default());
    }

    #[test]
    fn scope_levels_follow_merged_blocks() {
        use Quantifier::*;
        let p = Prefix::new(vec![block(Exists, &[3]), block(Exists, &[1]), block(Forall, &[2]), block(Exists, &[4])]);
        let s = Scope::new(&p, 4);
        assert_eq!([s.level(3), s.level(1), s.level(2), s.level(4)], [1, 1, 2, 3]);
        assert!(s.is_universal(2));
        assert_eq!(s.quantifier(5), None);
    }

    #[test]
    fn rejects_unbound_and_duplicate() {
        use Quantifier::*;
        let p = Prefix::new(vec![block(Exists, &[1])]);
        assert_eq!(Pcnf::new(p.clone(), vec![Clause::from_dimacs(&[2])]), Err(FormulaError::Unbound(2)));
        let q = Prefix::new(vec![block(Exists, &[1]), block(Forall, &[1])]);
        assert_eq!(Pcnf::new(q, vec![]), Err(FormulaError::DuplicateBinding(1)));
    }
}
