mod common;

use qbfkit::generate::{random_suite, RandomParams};
use qbfkit::solver::{solve_expansion, Limits, SearchConfig, SearchSolver, Status};

fn expected(b: bool) -> Status {
    if b {
        Status::Sat
    } else {
        Status::Unsat
    }
}

#[test]
fn search_and_expansion_agree_with_game_tree() {
    let suite = random_suite(7, 2000, &RandomParams::default());
    let mut fallbacks = 0;
    for (i, f) in suite.iter().enumerate() {
        let want = expected(common::evaluate(f));
        let mut s = SearchSolver::new(f, SearchConfig { trace: true, ..SearchConfig::default() });
        let got = s.solve(Limits::default()).status;
        assert_eq!(got, want, "search on instance {i}:\n{}", qbfkit::formula::write_qdimacs(f));
        fallbacks += s.stats().fallbacks;
        if s.stats().fallbacks == 0 {
            assert!(s.take_proof().is_some(), "instance {i} has no proof");
        }
        assert_eq!(solve_expansion(f, Limits::default()).status, want, "expansion on instance {i}");
    }
    assert_eq!(fallbacks, 0);
}
