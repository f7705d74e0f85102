mod common;

use common::evaluate;
use qbfkit::formula::{canonical_digest, DigestAlgorithm, Pcnf};
use qbfkit::generate::{random_suite, RandomParams};
use qbfkit::pipeline::{run_sequence, BundleSet, ExecutionSequence, FinalKind, PipelineResult};
use qbfkit::solver::{solve_expansion, Limits, Status};

fn permutations(items: &[char]) -> Vec<String> {
    if items.len() <= 1 {
        return vec![items.iter().collect()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let c = rest.remove(i);
        out.extend(permutations(&rest).into_iter().map(|p| format!("{c}{p}")));
    }
    out
}

fn status(r: &PipelineResult) -> bool {
    match &r.kind {
        FinalKind::SolvedSat => true,
        FinalKind::SolvedUnsat => false,
        FinalKind::Fixpoint(g) | FinalKind::RoundsExhausted(g) => evaluate(g),
    }
}

fn run(f: &Pcnf, seq: &str, bundles: &BundleSet) -> PipelineResult {
    let seq = ExecutionSequence::parse(&format!("({seq})^6")).unwrap();
    run_sequence(f, &seq, bundles, DigestAlgorithm::Md5, |_| {}).unwrap()
}

#[test]
fn all_orderings_preserve_truth_and_settle() {
    let bundles = BundleSet::standard();
    let orders = permutations(&['A', 'B', 'C', 'D']);
    assert_eq!(orders.len(), 24);
    let suite = random_suite(31, 500, &RandomParams::default());
    for f in &suite {
        let want = evaluate(f);
        for seq in &orders {
            let r = run(f, seq, &bundles);
            assert_eq!(status(&r), want, "{seq}");
            assert!(r.rounds.len() <= 6);
            let solved_rounds = r.rounds.iter().filter(|x| x.steps.iter().any(|s| s.solved.is_some())).count();
            assert!(solved_rounds <= 1);
            for w in r.rounds.windows(2) {
                assert_eq!(w[0].digest_after, w[1].digest_before);
            }
            if let FinalKind::Fixpoint(g) = &r.kind {
                let last = r.rounds.last().unwrap();
                assert_eq!(last.digest_before, last.digest_after);
                // a fixpoint is idempotent input
                let again = run(g, seq, &bundles);
                assert!(matches!(again.kind, FinalKind::Fixpoint(_)));
                assert_eq!(again.rounds.len(), 1);
                assert_eq!(again.rounds[0].digest_before, canonical_digest(g));
            }
        }
    }
}

#[test]
fn leading_bundle_solves_a_subset_of_the_sequence() {
    let bundles = BundleSet::standard();
    let suite = random_suite(32, 300, &RandomParams::larger());
    for first in ['A', 'B', 'C', 'D'] {
        let seq: String = std::iter::once(first).chain("ABCD".chars().filter(|&c| c != first)).collect();
        let (mut alone, mut chained) = (0, 0);
        for f in &suite {
            let a = run(f, &first.to_string(), &bundles).solved_in_round.is_some();
            let s = run(f, &seq, &bundles).solved_in_round.is_some();
            assert!(!a || s, "{first} solves an instance {seq} does not");
            alone += a as usize;
            chained += s as usize;
        }
        assert!(chained >= alone);
    }
}

#[test]
fn unsolved_inputs_settle_and_stay_settled() {
    let bundles = BundleSet::standard();
    let mut fixpoints = 0;
    for f in common::three_block(34, 8, 70) {
        let want = solve_expansion(&f, Limits::default()).status;
        for seq in ["ABCD", "DCBA", "BDAC"] {
            let r = run(&f, seq, &bundles);
            let got = match &r.kind {
                FinalKind::SolvedSat => Status::Sat,
                FinalKind::SolvedUnsat => Status::Unsat,
                FinalKind::Fixpoint(g) | FinalKind::RoundsExhausted(g) => solve_expansion(g, Limits::default()).status,
            };
            assert_eq!(got, want, "{seq}");
            if let FinalKind::Fixpoint(g) = &r.kind {
                let again = run(g, seq, &bundles);
                assert!(matches!(again.kind, FinalKind::Fixpoint(_)));
                assert_eq!(again.rounds.len(), 1);
                fixpoints += 1;
            }
        }
    }
    assert!(fixpoints > 0);
}
