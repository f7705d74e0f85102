//! Run an execution sequence round by round until a fixpoint.
//!
//! cargo run --example incremental_pipeline [sequence]

use qbfkit::formula::DigestAlgorithm;
use qbfkit::generate::{random_pcnf, RandomParams};
use qbfkit::pipeline::{run_sequence, BundleSet, ExecutionSequence, FinalKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let seq_text = std::env::args().nth(1).unwrap_or_else(|| "(DCBA)^6".into());
    let seq = ExecutionSequence::parse(&seq_text).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = RandomParams { max_vars: 40, max_clauses: 120, max_blocks: 5, max_clause_len: 5 };
    let f = random_pcnf(&mut rng, &params);
    println!("{} clauses, sequence {:?} x{}", f.clauses().len(), seq.steps(), seq.max_rounds);

    let result = run_sequence(&f, &seq, &BundleSet::standard(), DigestAlgorithm::Md5, |r| {
        let steps: Vec<String> = r
            .steps
            .iter()
            .map(|s| format!("{}{}", s.label, if s.modified { "*" } else { "" }))
            .collect();
        println!("round {} {} -> {} [{}]", r.round, r.digest_before, r.digest_after, steps.join(" "));
    })
    .unwrap();

    match result.kind {
        FinalKind::SolvedSat => println!("solved SAT in round {}", result.solved_in_round.unwrap()),
        FinalKind::SolvedUnsat => println!("solved UNSAT in round {}", result.solved_in_round.unwrap()),
        FinalKind::Fixpoint(g) => println!("fixpoint, {} clauses left", g.clauses().len()),
        FinalKind::RoundsExhausted(g) => println!("out of rounds, {} clauses left", g.clauses().len()),
    }
}
