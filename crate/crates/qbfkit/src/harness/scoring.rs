use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{HarnessError, RunRecord};
use crate::solver::Status;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreRow {
    pub tool: String,
    pub solved: usize,
    pub sat: usize,
    pub unsat: usize,
    pub unique: usize,
    pub avg_solved_time: f64,
    pub total_time: f64,
    pub par_k: Option<f64>,
}

/// One record per (tool, instance): a solved run beats an unsolved one, then
/// the faster run wins. Independent of input order.
fn best_runs(records: &[RunRecord]) -> BTreeMap<&str, BTreeMap<&str, &RunRecord>> {
    let mut out: BTreeMap<&str, BTreeMap<&str, &RunRecord>> = BTreeMap::new();
    for r in records {
        let slot = out.entry(r.tool.as_str()).or_default().entry(r.instance.as_str()).or_insert(r);
        let key = |x: &RunRecord| (!x.solved(), x.wall_s, x.status as u8, x.trial.clone());
        if key(r).partial_cmp(&key(slot)) == Some(std::cmp::Ordering::Less) {
            *slot = r;
        }
    }
    out
}

fn rows(records: &[RunRecord], limit: f64, k: Option<f64>) -> Vec<ScoreRow> {
    let instances: BTreeSet<&str> = records.iter().map(|r| r.instance.as_str()).collect();
    let n = instances.len();
    let best = best_runs(records);
    let mut solvers: BTreeMap<&str, usize> = BTreeMap::new();
    for runs in best.values() {
        for (inst, r) in runs {
            if r.solved() {
                *solvers.entry(inst).or_default() += 1;
            }
        }
    }
    best.iter()
        .map(|(tool, runs)| {
            let solved: Vec<&&RunRecord> = runs.values().filter(|r| r.solved()).collect();
            let times: f64 = solved.iter().map(|r| r.wall_s.min(limit)).sum();
            let unsolved = n - solved.len();
            ScoreRow {
                tool: tool.to_string(),
                solved: solved.len(),
                sat: solved.iter().filter(|r| r.status == Status::Sat).count(),
                unsat: solved.iter().filter(|r| r.status == Status::Unsat).count(),
                unique: solved.iter().filter(|r| solvers[r.instance.as_str()] == 1).count(),
                avg_solved_time: if solved.is_empty() { 0.0 } else { times / solved.len() as f64 },
                total_time: times + limit * unsolved as f64,
                par_k: k.map(|k| if n == 0 { 0.0 } else { (times + k * limit * unsolved as f64) / n as f64 }),
            }
        })
        .collect()
}

/// Rows sorted by solved count, then total time. Instances are those named in
/// any record; a tool without a record for one counts it unsolved at `limit`.
pub fn rank_solved(records: &[RunRecord], limit: f64) -> Vec<ScoreRow> {
    let mut r = rows(records, limit, None);
    r.sort_by(|a, b| b.solved.cmp(&a.solved).then(a.total_time.total_cmp(&b.total_time)).then(a.tool.cmp(&b.tool)));
    r
}

/// Rows sorted by penalized average runtime: unsolved runs cost `k * limit`.
pub fn rank_par(records: &[RunRecord], k: f64, limit: f64) -> Vec<ScoreRow> {
    let mut r = rows(records, limit, Some(k));
    r.sort_by(|a, b| {
        let (x, y) = (a.par_k.unwrap_or(0.0), b.par_k.unwrap_or(0.0));
        x.total_cmp(&y).then(a.tool.cmp(&b.tool))
    });
    r
}

/// Thousands with a `K` suffix, rounded to nearest.
pub fn format_k(seconds: f64) -> String {
    format!("{}K", (seconds / 1000.0).round() as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FootCategory {
    #[serde(rename = "NO-prepro-preferred")]
    NoPrepro,
    #[serde(rename = "WANT-prepro")]
    WantPrepro,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FootRow {
    pub tool: String,
    pub category: FootCategory,
    pub original: usize,
    pub preprocessed: usize,
    pub best_foot: usize,
    pub worst_foot: usize,
}

pub type BestFootReport = Vec<FootRow>;

/// Per tool, compares solved counts on original and preprocessed inputs.
/// Ties favour preprocessing.
pub fn best_foot(original: &[RunRecord], preprocessed: &[RunRecord]) -> Result<BestFootReport, HarnessError> {
    let set = |rs: &[RunRecord]| rs.iter().map(|r| r.instance.clone()).collect::<BTreeSet<String>>();
    let (a, b) = (set(original), set(preprocessed));
    if a != b {
        let diff: Vec<String> = a.symmetric_difference(&b).take(5).cloned().collect();
        return Err(HarnessError::InstanceMismatch(diff.join(", ")));
    }
    let count = |rs: &[RunRecord]| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for (tool, runs) in best_runs(rs) {
            m.insert(tool.to_string(), runs.values().filter(|r| r.solved()).count());
        }
        m
    };
    let (o, p) = (count(original), count(preprocessed));
    let tools: BTreeSet<&String> = o.keys().chain(p.keys()).collect();
    Ok(tools
        .into_iter()
        .map(|t| {
            let (x, y) = (o.get(t).copied().unwrap_or(0), p.get(t).copied().unwrap_or(0));
            FootRow {
                tool: t.clone(),
                category: if y >= x { FootCategory::WantPrepro } else { FootCategory::NoPrepro },
                original: x,
                preprocessed: y,
                best_foot: x.max(y),
                worst_foot: x.min(y),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Discrepancy {
    pub instance: String,
    pub expected: Option<Status>,
    /// Every solved report on the instance, sorted.
    pub reports: Vec<(String, Status)>,
}

/// Instances where solved reports disagree with each other or with the
/// expected status. Unknown results never conflict.
pub fn detect_discrepancies(records: &[RunRecord], expected: &BTreeMap<String, Status>) -> Vec<Discrepancy> {
    let mut by_instance: BTreeMap<&str, BTreeSet<(String, Status)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.solved()) {
        by_instance.entry(&r.instance).or_default().insert((r.tool.clone(), r.status));
    }
    by_instance
        .into_iter()
        .filter_map(|(inst, reports)| {
            let want = expected.get(inst).copied().filter(|s| s.is_solved());
            let statuses: BTreeSet<Status> = reports.iter().map(|(_, s)| *s).chain(want).collect();
            (statuses.len() > 1).then(|| Discrepancy { instance: inst.to_string(), expected: want, reports: reports.into_iter().collect() })
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn rec(tool: &str, inst: &str, status: Status, wall: f64) -> RunRecord {
        RunRecord {
            tool: tool.into(),
            instance: inst.into(),
            family: "f".into(),
            status,
            wall_s: wall,
            mem_bytes: 0,
            exit: status.exit_code(),
            trial: "1".into(),
        }
    }

    #[test]
    fn totals_count_unsolved_at_the_limit() {
        let mut rs = vec![rec("t", "i0", Status::Sat, 10.0), rec("t", "i1", Status::Unknown, 3.0)];
        rs.push(rec("u", "i2", Status::Unsat, 1.0));
        let rows = rank_solved(&rs, 100.0);
        let t = rows.iter().find(|r| r.tool == "t").unwrap();
        assert_eq!((t.solved, t.unique, t.avg_solved_time, t.total_time), (1, 1, 10.0, 210.0));
        let u = rows.iter().find(|r| r.tool == "u").unwrap();
        assert_eq!(u.total_time, 201.0);
        assert_eq!(rows[0].tool, "u");
    }

    #[test]
    fn par_examples() {
        let rs = vec![rec("t", "a", Status::Sat, 100.0), rec("t", "b", Status::Unsat, 50.0), rec("t", "c", Status::Unknown, 200.0)];
        let p = rank_par(&rs, 10.0, 200.0)[0].par_k.unwrap();
        assert!((p - 716.67).abs() < 0.01);
        let instant = vec![rec("t", "a", Status::Sat, 0.0)];
        assert_eq!(rank_par(&instant, 10.0, 200.0)[0].par_k, Some(0.0));
        let none = vec![rec("t", "a", Status::Unknown, 200.0), rec("t", "b", Status::Unknown, 200.0)];
        assert_eq!(rank_par(&none, 10.0, 200.0)[0].par_k, Some(2000.0));
    }

    #[test]
    fn k_formatting() {
        assert_eq!(format_k(245_281.0), "245K");
        assert_eq!(format_k(132_000.0), "132K");
        assert_eq!(format_k(499.0), "0K");
    }

    #[test]
    fn foot_rules() {
        let mk = |n: usize, solved: usize| -> Vec<RunRecord> {
            (0..n).map(|i| rec("s", &format!("i{i}"), if i < solved { Status::Sat } else { Status::Unknown }, 1.0)).collect()
        };
        let r = best_foot(&mk(12, 8), &mk(12, 10)).unwrap();
        assert_eq!((r[0].category, r[0].best_foot, r[0].worst_foot), (FootCategory::WantPrepro, 10, 8));
        let r = best_foot(&mk(12, 5), &mk(12, 5)).unwrap();
        assert_eq!((r[0].category, r[0].best_foot, r[0].worst_foot), (FootCategory::WantPrepro, 5, 5));
        assert!(matches!(best_foot(&mk(12, 5), &mk(11, 5)), Err(HarnessError::InstanceMismatch(_))));
    }

    #[test]
    fn discrepancies() {
        let none = BTreeMap::new();
        let mut rs = vec![rec("a", "i", Status::Sat, 1.0), rec("b", "i", Status::Sat, 1.0), rec("c", "i", Status::Unknown, 1.0)];
        assert!(detect_discrepancies(&rs, &none).is_empty());
        rs.push(rec("c", "i", Status::Unsat, 1.0));
        let d = detect_discrepancies(&rs, &none);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].reports.len(), 3);
        let expected: BTreeMap<String, Status> = [("j".to_string(), Status::Unsat)].into();
        assert_eq!(detect_discrepancies(&[rec("a", "j", Status::Sat, 1.0)], &expected).len(), 1);
    }
}
