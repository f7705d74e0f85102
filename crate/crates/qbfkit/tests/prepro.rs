mod common;

use common::evaluate;
use proptest::prelude::*;
use qbfkit::formula::{compute_stats, Pcnf};
use qbfkit::sat::{SatBudget, SatResult, SatSolver};
use qbfkit::generate::{random_pcnf, random_suite, RandomParams};
use qbfkit::prepro::{preprocess, Budgets, OutcomeKind, PreproOutcome, Technique, ToolBundle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn status(o: &PreproOutcome) -> bool {
    match &o.kind {
        OutcomeKind::SolvedSat => true,
        OutcomeKind::SolvedUnsat => false,
        OutcomeKind::Simplified(g) => evaluate(g),
    }
}

fn bundles() -> Vec<ToolBundle> {
    let mut out: Vec<ToolBundle> = "ABCD".chars().filter_map(ToolBundle::standard).collect();
    for t in Technique::ALL {
        out.push(ToolBundle::new(t.name(), vec![t], true).unwrap());
    }
    let unbounded = Budgets { var_elim: 1000, expansion: Some(1000) };
    out.push(ToolBundle::standard('B').unwrap().with_budgets(unbounded));
    out
}

#[test]
fn every_bundle_preserves_truth() {
    let all = bundles();
    for (seed, params) in [(21, RandomParams::default()), (22, RandomParams::larger())] {
        for (i, f) in random_suite(seed, 500, &params).iter().enumerate() {
            let want = evaluate(f);
            for b in &all {
                let o = preprocess(f, b, None);
                assert!(!o.failed && !o.timed_out);
                assert_eq!(status(&o), want, "seed {seed} instance {i} bundle {}", b.name);
            }
        }
    }
}

#[test]
fn reduction_bundle_never_solves_true_formulas() {
    let a = ToolBundle::standard('A').unwrap();
    let mut unsat_solved = 0;
    for f in random_suite(23, 500, &RandomParams::default()) {
        let o = preprocess(&f, &a, None);
        if !f.clauses().is_empty() {
            assert_ne!(o.kind, OutcomeKind::SolvedSat);
        }
        if o.kind == OutcomeKind::SolvedUnsat {
            assert!(!evaluate(&f));
            unsat_solved += 1;
        }
    }
    assert!(unsat_solved > 0);
}

fn propositional(f: &Pcnf) -> bool {
    let mut s = SatSolver::new(f.max_var());
    for c in f.clauses() {
        s.add_clause(c.lits());
    }
    matches!(s.solve(SatBudget::default()), SatResult::Sat(_))
}

#[test]
fn full_expansion_leaves_a_propositional_formula() {
    let b = ToolBundle::new("X", vec![Technique::UniversalExpansion], false)
        .unwrap()
        .with_budgets(Budgets { var_elim: 0, expansion: Some(1 << 20) });
    for f in random_suite(24, 200, &RandomParams::default()) {
        let mut g = f.clone();
        let want = evaluate(&f);
        loop {
            let o = preprocess(&g, &b, None);
            match o.kind {
                OutcomeKind::Simplified(h) if compute_stats(&h).num_universal > 0 => g = h,
                OutcomeKind::Simplified(h) => {
                    assert_eq!(propositional(&h), want);
                    break;
                }
                OutcomeKind::SolvedSat => {
                    assert!(want);
                    break;
                }
                OutcomeKind::SolvedUnsat => {
                    assert!(!want);
                    break;
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixpoint_loop_output_is_stable_under_a_second_pass(seed in any::<u64>()) {
        let f = random_pcnf(&mut ChaCha8Rng::seed_from_u64(seed), &RandomParams::default());
        let d = ToolBundle::standard('D').unwrap();
        let once = preprocess(&f, &d, None);
        if let OutcomeKind::Simplified(g) = &once.kind {
            let twice = preprocess(g, &d, None);
            prop_assert_eq!(status(&twice), status(&once));
            let size = |o: &PreproOutcome| o.formula().map_or(0, |h| h.num_literals());
            prop_assert!(size(&twice) <= size(&once));
        }
    }
}
