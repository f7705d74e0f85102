//! Reference evaluation by exhaustive game-tree search.
#![allow(dead_code)]

use qbfkit::formula::{Pcnf, Quantifier};

/// Truth value of a closed prenex formula by trying every assignment in prefix order.
pub fn evaluate(f: &Pcnf) -> bool {
    let order: Vec<(u32, Quantifier)> =
        f.prefix().blocks().iter().flat_map(|b| b.vars.iter().map(move |&v| (v, b.quantifier))).collect();
    let mut assignment = vec![false; f.max_var() as usize + 1];
    go(f, &order, 0, &mut assignment)
}

fn go(f: &Pcnf, order: &[(u32, Quantifier)], i: usize, a: &mut Vec<bool>) -> bool {
    if i == order.len() {
        return f.clauses().iter().all(|c| c.lits().iter().any(|l| a[l.var() as usize] == l.is_positive()));
    }
    let (v, q) = order[i];
    let branch = |val: bool, a: &mut Vec<bool>| {
        a[v as usize] = val;
        go(f, order, i + 1, a)
    };
    match q {
        Quantifier::Exists => branch(false, a) || branch(true, a),
        Quantifier::Forall => branch(false, a) && branch(true, a),
    }
}

use qbfkit::formula::Literal;
use qbfkit::solver::{Proof, StepKind};

/// Single-step corruptions of a proof, each with a short label.
pub fn mutations(p: &Proof, max_swaps: usize) -> Vec<(String, Proof)> {
    let mut out = Vec::new();
    for i in 0..p.steps.len() {
        let mut m = p.clone();
        let gone = m.steps.remove(i).id;
        out.push((format!("delete step {gone}"), m));
    }
    let with_ants: Vec<usize> = (0..p.steps.len()).filter(|&i| !p.steps[i].antecedents.is_empty()).collect();
    let lits_of = |id: u32| p.steps.iter().find(|s| s.id == id).map(|s| s.lits.clone());
    let mut swaps = 0;
    'outer: for (x, &i) in with_ants.iter().enumerate() {
        for &j in &with_ants[x + 1..] {
            let (a, b) = (p.steps[i].antecedents[0], p.steps[j].antecedents[0]);
            if a == b || lits_of(a) == lits_of(b) {
                continue;
            }
            let mut m = p.clone();
            m.steps[i].antecedents[0] = b;
            m.steps[j].antecedents[0] = a;
            out.push((format!("swap antecedents of steps {} and {}", p.steps[i].id, p.steps[j].id), m));
            swaps += 1;
            if swaps >= max_swaps {
                break 'outer;
            }
        }
    }
    for (i, s) in p.steps.iter().enumerate() {
        if !matches!(s.kind, StepKind::Resolution | StepKind::CubeResolution) {
            continue;
        }
        let pivot = s.pivot.expect("solver records pivots");
        let a = p.steps.iter().position(|t| t.id == s.antecedents[0]).expect("antecedent present");
        let mut m = p.clone();
        for l in &mut m.steps[a].lits {
            if l.var() == pivot {
                *l = !*l;
            }
        }
        out.push((format!("flip pivot {pivot} in step {}", p.steps[a].id), m));

        let mut m = p.clone();
        let fresh = p.steps.iter().map(|t| t.id).max().unwrap_or(0) + 1;
        let mut t = s.clone();
        t.id = fresh;
        t.lits.extend([Literal::new(pivot, true), Literal::new(pivot, false)]);
        m.steps.insert(i + 1, t);
        out.push((format!("inject tautology after step {}", s.id), m));
    }
    out
}

/// Formulas with prefix `exists 1..=10, forall 11..=13, exists 14..=25` and
/// random 3-literal clauses. With about 70 clauses the standard bundles often
/// stop at a fixpoint instead of solving them.
pub fn three_block(seed: u64, count: usize, clauses: usize) -> Vec<Pcnf> {
    use qbfkit::formula::{Clause, Prefix, QuantifierBlock};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let prefix = Prefix::new(vec![
                QuantifierBlock::new(Quantifier::Exists, (1..=10).collect()),
                QuantifierBlock::new(Quantifier::Forall, (11..=13).collect()),
                QuantifierBlock::new(Quantifier::Exists, (14..=25).collect()),
            ]);
            let mut pool: Vec<u32> = (1..=25).collect();
            let cs = (0..clauses)
                .map(|_| {
                    pool.shuffle(&mut rng);
                    Clause::new(pool[..3].iter().map(|&v| Literal::new(v, rng.gen_bool(0.5))).collect())
                })
                .collect();
            Pcnf::new(prefix, cs).unwrap()
        })
        .collect()
}
