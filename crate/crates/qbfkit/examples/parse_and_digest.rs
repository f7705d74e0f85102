//! Parse a QDIMACS text, print its stats and canonical digests.
//!
//! cargo run --example parse_and_digest [file.qdimacs]

use qbfkit::formula::{canonical_digest_with, compute_stats, parse_qdimacs, write_qdimacs, DigestAlgorithm, Pcnf};

const SAMPLE: &str = "c two blocks
p cnf 4 3
a 1 2 0
e 3 4 0
1 3 0
-2 4 0
-3 -4 0
";

fn main() {
    let text = match std::env::args().nth(1) {
        Some(p) => std::fs::read(&p).expect("readable file"),
        None => SAMPLE.as_bytes().to_vec(),
    };
    let f = match parse_qdimacs(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("parse error: {e}");
            std::process::exit(2);
        }
    };
    println!("{:?}", compute_stats(&f));
    println!("md5    {}", canonical_digest_with(&f, DigestAlgorithm::Md5));
    println!("sha256 {}", canonical_digest_with(&f, DigestAlgorithm::Sha256));

    // clause order and literal order do not change the digest
    let reversed = f.clauses().iter().rev().cloned().collect();
    let shuffled = Pcnf::new(f.prefix().clone(), reversed).unwrap();
    assert_eq!(canonical_digest_with(&f, DigestAlgorithm::Md5), canonical_digest_with(&shuffled, DigestAlgorithm::Md5));
    print!("{}", write_qdimacs(&f));
}
