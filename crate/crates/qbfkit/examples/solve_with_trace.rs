//! Solve with the search engine and print the recorded proof.

use qbfkit::formula::parse_qdimacs;
use qbfkit::solver::{solve_search, Limits};

const FORMULA: &str = "p cnf 3 4
e 1 0
a 2 0
e 3 0
1 2 3 0
1 -2 -3 0
-1 2 -3 0
-1 -2 3 0
";

fn main() {
    let f = parse_qdimacs(FORMULA.as_bytes()).unwrap();
    let (out, proof) = solve_search(&f, Limits::time(5.0), true);
    println!("s {} ({:.3} ms)", out.status, out.wall_time * 1e3);
    if let Some(p) = proof {
        println!("{} proof, {} resolutions, max width {}", p.kind.name(), p.num_resolutions(), p.max_width());
        print!("{}", p.to_text());
    }
}
