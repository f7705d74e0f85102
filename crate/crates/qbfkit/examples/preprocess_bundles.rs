//! Run each standard bundle once on a formula and show what every technique did.

use qbfkit::formula::{compute_stats, parse_qdimacs, write_qdimacs};
use qbfkit::prepro::{preprocess, OutcomeKind, ToolBundle};

const FORMULA: &str = "p cnf 6 6
a 1 0
e 2 3 0
a 4 0
e 5 6 0
1 2 4 0
-1 3 5 0
2 3 0
2 3 -4 0
-2 6 0
5 -6 -4 0
";

fn main() {
    let f = parse_qdimacs(FORMULA.as_bytes()).unwrap();
    println!("input {:?}", compute_stats(&f));
    for label in ['A', 'B', 'C', 'D'] {
        let bundle = ToolBundle::standard(label).unwrap();
        let out = preprocess(&f, &bundle, None);
        let log: Vec<String> = out.log.iter().map(|(t, n)| format!("{}={n}", t.name())).collect();
        println!("\n[{label}] {}", log.join(" "));
        match &out.kind {
            OutcomeKind::Simplified(g) => print!("{:?}\n{}", compute_stats(g), write_qdimacs(g)),
            OutcomeKind::SolvedSat => println!("solved: SAT"),
            OutcomeKind::SolvedUnsat => println!("solved: UNSAT"),
        }
    }
}
