mod common;

use qbfkit::cert::{check_proof, extract_certificate, validate_certificate, ValidateBudget, ValidationMethod};
use qbfkit::formula::compute_stats;
use qbfkit::generate::{random_suite, RandomParams};
use qbfkit::solver::{solve_search, Limits, ProofKind, Status};

#[test]
fn closed_loop_on_random_suites() {
    let mut checked = 0;
    for (seed, params) in [(11, RandomParams::default()), (12, RandomParams::larger())] {
        for f in random_suite(seed, 400, &params) {
            let (out, proof) = solve_search(&f, Limits::default(), true);
            let proof = proof.expect("proof for every solved instance");
            let want = common::evaluate(&f);
            assert_eq!(out.status == Status::Sat, want);
            assert_eq!(proof.kind == ProofKind::Satisfaction, want);
            let report = check_proof(&proof, &f);
            assert!(report.accepted, "{report:?}\n{}", proof.to_text());
            let cert = extract_certificate(&proof, &f).unwrap();
            cert.check_dependencies(&f).unwrap();
            let v = validate_certificate(&cert, &f, ValidateBudget::default()).unwrap();
            assert!(v.valid && v.method == ValidationMethod::Exhaustive, "{}\n{}\n{}", qbfkit::formula::write_qdimacs(&f), proof.to_text(), cert.to_text());
            let v = validate_certificate(&cert, &f, ValidateBudget { exhaustive_bits: 0, ..Default::default() }).unwrap();
            let stats = compute_stats(&f);
            let free = if want { stats.num_universal } else { stats.num_existential };
            assert!(v.valid);
            assert_eq!(v.method == ValidationMethod::Sat, free > 0);
            checked += 1;
        }
    }
    assert_eq!(checked, 800);
}

#[test]
fn every_mutation_is_rejected() {
    let mut total = 0;
    for f in random_suite(13, 300, &RandomParams::larger()) {
        let (_, proof) = solve_search(&f, Limits::default(), true);
        let proof = proof.unwrap();
        for (label, m) in common::mutations(&proof, 10) {
            let r = check_proof(&m, &f);
            assert!(!r.accepted, "{label} accepted\n{}", proof.to_text());
            assert!(r.reason.is_some());
            total += 1;
        }
    }
    assert!(total > 1000);
}
