//! Cross-check the search solver against the expansion solver on a seeded suite.
//!
//! cargo run --release --example expansion_oracle [seed] [count]

use qbfkit::generate::{random_suite, RandomParams};
use qbfkit::solver::{solve_expansion, solve_search, Limits, Status};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let count: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);

    let (mut sat, mut unsat, mut disagree) = (0, 0, 0);
    for (i, f) in random_suite(seed, count, &RandomParams::larger()).iter().enumerate() {
        let a = solve_search(f, Limits::time(10.0), false).0.status;
        let b = solve_expansion(f, Limits::time(10.0)).status;
        match (a, b) {
            (Status::Sat, Status::Sat) => sat += 1,
            (Status::Unsat, Status::Unsat) => unsat += 1,
            _ => {
                disagree += 1;
                eprintln!("instance {i}: search {a}, expansion {b}");
            }
        }
    }
    println!("seed {seed}: {sat} sat, {unsat} unsat, {disagree} disagreements");
    if disagree > 0 {
        std::process::exit(1);
    }
}
