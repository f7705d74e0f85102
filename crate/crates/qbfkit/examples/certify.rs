//! Solve, check the proof, extract a certificate and validate it.

use qbfkit::cert::{check_proof, extract_certificate, validate_certificate, Certificate, ValidateBudget};
use qbfkit::generate::{random_suite, RandomParams};
use qbfkit::solver::{solve_search, Limits};

fn main() {
    let mut shown = false;
    let mut counts = [0usize; 2];
    for f in random_suite(99, 100, &RandomParams::larger()) {
        let (out, proof) = solve_search(&f, Limits::time(10.0), true);
        let Some(proof) = proof else {
            println!("no proof ({})", out.status);
            continue;
        };
        let report = check_proof(&proof, &f);
        assert!(report.accepted, "{report:?}");
        let cert = extract_certificate(&proof, &f).unwrap();
        // round trip through the text format
        let cert = Certificate::parse(&cert.to_text()).unwrap();
        let v = validate_certificate(&cert, &f, ValidateBudget::default()).unwrap();
        assert!(v.valid);
        counts[usize::from(out.status == qbfkit::solver::Status::Sat)] += 1;
        if !shown && cert.graph.len() > 6 {
            println!("{} steps, {} resolutions; {:?} validation", report.steps, report.resolutions, v.method);
            print!("{}", cert.to_text());
            shown = true;
        }
    }
    println!("checked and validated: {} unsat, {} sat", counts[0], counts[1]);
}
