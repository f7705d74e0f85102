//! Seeded random PCNF generation for test suites and examples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Clause, Literal, Pcnf, Prefix, Quantifier, QuantifierBlock};

#[derive(Clone, Copy, Debug)]
pub struct RandomParams {
    pub max_vars: u32,
    pub max_clauses: usize,
    pub max_blocks: usize,
    pub max_clause_len: usize,
}

impl RandomParams {
    /// Larger formulas on which search needs a fair amount of learning.
    pub fn larger() -> RandomParams {
        RandomParams { max_vars: 13, max_clauses: 36, max_blocks: 6, max_clause_len: 4 }
    }
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { max_vars: 8, max_clauses: 20, max_blocks: 4, max_clause_len: 4 }
    }
}

/// One random formula. Variable count, block count and clause count are drawn
/// uniformly within the bounds. One clause in twenty is a unit; the rest have
/// between 2 and `max_clause_len` literals.
pub fn random_pcnf<R: Rng>(rng: &mut R, p: &RandomParams) -> Pcnf {
    let n = rng.gen_range(1..=p.max_vars.max(1));
    let nblocks = rng.gen_range(1..=p.max_blocks.max(1).min(n as usize));
    let mut vars: Vec<u32> = (1..=n).collect();
    vars.shuffle(rng);

    // cut points split the shuffled variables into nonempty blocks
    let mut cuts: Vec<usize> = (1..n as usize).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(nblocks - 1).collect();
    cuts.sort_unstable();
    let mut q = if rng.gen_bool(0.5) { Quantifier::Exists } else { Quantifier::Forall };
    let mut blocks = Vec::with_capacity(nblocks);
    let mut start = 0;
    for end in cuts.into_iter().chain(std::iter::once(n as usize)) {
        blocks.push(QuantifierBlock::new(q, vars[start..end].to_vec()));
        q = q.dual();
        start = end;
    }

    let nclauses = rng.gen_range(1..=p.max_clauses.max(1));
    let mut clauses = Vec::with_capacity(nclauses);
    for _ in 0..nclauses {
        let cap = p.max_clause_len.clamp(1, n as usize);
        let len = if cap == 1 || rng.gen_range(0..20) == 0 { 1 } else { rng.gen_range(2..=cap) };
        let mut pool: Vec<u32> = (1..=n).collect();
        pool.shuffle(rng);
        clauses.push(Clause::new(pool[..len].iter().map(|&v| Literal::new(v, rng.gen_bool(0.5))).collect()));
    }
    Pcnf::new(Prefix::new(blocks), clauses).expect("generated formula is closed")
}

/// `count` formulas from a ChaCha8 stream seeded with `seed`.
pub fn random_suite(seed: u64, count: usize, p: &RandomParams) -> Vec<Pcnf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_pcnf(&mut rng, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::compute_stats;

    #[test]
    fn respects_bounds_and_is_deterministic() {
        let p = RandomParams::default();
        let a = random_suite(7, 200, &p);
        assert_eq!(a, random_suite(7, 200, &p));
        for f in &a {
            let s = compute_stats(f);
            assert!(s.num_vars <= 8 && s.num_clauses <= 20 && s.num_blocks <= 4);
            assert!(f.clauses().iter().all(|c| !c.is_empty() && c.len() <= 4));
        }
    }
}
