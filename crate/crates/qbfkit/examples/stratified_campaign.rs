//! Build a small benchmark tree, sample it per family and run both engines.
//! Writes the run log and CSV reports to a temp directory.

use std::time::Duration;

use qbfkit::formula::write_qdimacs;
use qbfkit::generate::{random_suite, RandomParams};
use qbfkit::harness::{emit_reports, execute_runs, register_benchmarks, stratified_sample, RunLimits, ToolSet};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("bench");
    for (fam, n, seed) in [("small", 10, 1), ("medium", 8, 2), ("large", 4, 3)] {
        let params = if fam == "large" { RandomParams::larger() } else { RandomParams::default() };
        std::fs::create_dir_all(root.join(fam)).unwrap();
        for (i, f) in random_suite(seed, n, &params).iter().enumerate() {
            std::fs::write(root.join(fam).join(format!("{i:02}.qdimacs")), write_qdimacs(f)).unwrap();
        }
    }

    let reg = register_benchmarks(&root).unwrap();
    println!("{} instances, {} duplicate groups", reg.instances.len(), reg.duplicates.len());
    let set = stratified_sample(&reg, 6, 2022);
    for (fam, insts) in reg.families() {
        let picked = set.instances.iter().filter(|i| i.family == fam).count();
        println!("  {fam}: {picked} of {}", insts.len());
    }

    let limits = RunLimits { time: Duration::from_secs(5), memory: None };
    let log = dir.path().join("runs.jsonl");
    let records = execute_runs(&set.instances, &ToolSet::internal(), limits, 4, &log, "1").unwrap();
    println!("{} runs logged to {}", records.len(), log.display());

    let out = dir.path().join("reports");
    for p in emit_reports(&records, &set.instances, 5.0, Some(10.0), &out).unwrap() {
        println!("--- {}", p.file_name().unwrap().to_string_lossy());
        print!("{}", std::fs::read_to_string(&p).unwrap());
    }
}
