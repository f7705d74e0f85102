//! Score synthetic campaigns: solved ranking, PAR10, best-foot split and
//! discrepancies.

use std::collections::BTreeMap;

use qbfkit::harness::{best_foot, detect_discrepancies, format_k, rank_par, rank_solved, RunRecord};
use qbfkit::solver::Status;

const LIMIT: f64 = 900.0;

fn campaign(tool: &str, n: usize, solved: usize, time: f64) -> Vec<RunRecord> {
    (0..n)
        .map(|i| {
            let status = if i >= solved {
                Status::Unknown
            } else if i % 3 == 0 {
                Status::Unsat
            } else {
                Status::Sat
            };
            RunRecord {
                tool: tool.into(),
                instance: format!("inst{i:03}"),
                family: format!("fam{}", i % 5),
                status,
                wall_s: if status.is_solved() { time } else { LIMIT },
                mem_bytes: 0,
                exit: status.exit_code(),
                trial: "1".into(),
            }
        })
        .collect()
}

fn main() {
    let mut records = campaign("slow", 345, 77, 53.0);
    records.extend(campaign("fast", 345, 210, 50.0));
    for row in rank_solved(&records, LIMIT) {
        println!("{:>5} solved {:>3} total {} ({:.0} s)", row.tool, row.solved, format_k(row.total_time), row.total_time);
    }
    for row in rank_par(&records, 10.0, LIMIT) {
        println!("{:>5} PAR10 {:.2}", row.tool, row.par_k.unwrap());
    }

    let original = [campaign("x", 300, 142, 10.0), campaign("y", 300, 100, 10.0)].concat();
    let preprocessed = [campaign("x", 300, 93, 10.0), campaign("y", 300, 120, 10.0)].concat();
    for row in best_foot(&original, &preprocessed).unwrap() {
        println!("{}: {} best {} worst {}", row.tool, serde_json::to_string(&row.category).unwrap(), row.best_foot, row.worst_foot);
    }

    let mut clash = campaign("fast", 3, 3, 1.0);
    clash[1].tool = "other".into();
    clash[1].status = if clash[0].status == Status::Sat { Status::Unsat } else { Status::Sat };
    clash[1].instance = clash[0].instance.clone();
    for d in detect_discrepancies(&clash, &BTreeMap::new()) {
        println!("discrepancy on {}: {:?}", d.instance, d.reports);
    }
}
