use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::scoring::{rank_par, rank_solved, ScoreRow};
use super::{BenchmarkInstance, HarnessError, RunRecord};

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// `tool,rank,time`: each tool's solved-run times ascending, ranks from 1.
pub fn write_cactus<W: Write>(out: W, records: &[RunRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tool", "rank", "time"]).map_err(csv_err)?;
    let mut by_tool: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.solved()) {
        by_tool.entry(&r.tool).or_default().push(r.wall_s);
    }
    for (tool, mut times) in by_tool {
        times.sort_by(f64::total_cmp);
        for (i, t) in times.iter().enumerate() {
            w.write_record([tool.to_string(), (i + 1).to_string(), t.to_string()]).map_err(csv_err)?;
        }
    }
    w.flush()
}

/// One row per tool, one column per family headed `name (size)`, cells are
/// solved counts.
pub fn write_families<W: Write>(out: W, records: &[RunRecord], instances: &[BenchmarkInstance]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    let mut family_of: BTreeMap<&str, &str> = BTreeMap::new();
    for i in instances {
        *sizes.entry(&i.family).or_default() += 1;
        family_of.insert(&i.id, &i.family);
    }
    let mut header = vec!["tool".to_string()];
    header.extend(sizes.iter().map(|(f, n)| format!("{f} ({n})")));
    w.write_record(&header).map_err(csv_err)?;
    let mut solved: BTreeMap<&str, BTreeMap<&str, BTreeSet<&str>>> = BTreeMap::new();
    for r in records {
        let tool = solved.entry(&r.tool).or_default();
        if let (true, Some(f)) = (r.solved(), family_of.get(r.instance.as_str())) {
            tool.entry(f).or_default().insert(&r.instance);
        }
    }
    for (tool, fams) in solved {
        let mut row = vec![tool.to_string()];
        row.extend(sizes.keys().map(|f| fams.get(f).map_or(0, BTreeSet::len).to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_scores<W: Write>(out: W, rows: &[ScoreRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tool", "solved", "sat", "unsat", "unique", "avg_solved_time", "total_time", "par_k"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.tool.clone(),
            r.solved.to_string(),
            r.sat.to_string(),
            r.unsat.to_string(),
            r.unique.to_string(),
            format!("{:.2}", r.avg_solved_time),
            format!("{:.2}", r.total_time),
            r.par_k.map(|p| format!("{p:.2}")).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Writes `cactus.csv`, `families.csv` and `scores.csv` into `dir`. Scores
/// are ranked by PAR-k when `par` is given, else by solved count.
pub fn emit_reports(
    records: &[RunRecord],
    instances: &[BenchmarkInstance],
    limit: f64,
    par: Option<f64>,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let rows = match par {
        Some(k) => rank_par(records, k, limit),
        None => rank_solved(records, limit),
    };
    let paths = [dir.join("cactus.csv"), dir.join("families.csv"), dir.join("scores.csv")];
    let create = |p: &Path| std::fs::File::create(p).map_err(|e| HarnessError::io(p, e));
    write_cactus(create(&paths[0])?, records).map_err(|e| HarnessError::io(&paths[0], e))?;
    write_families(create(&paths[1])?, records, instances).map_err(|e| HarnessError::io(&paths[1], e))?;
    write_scores(create(&paths[2])?, &rows).map_err(|e| HarnessError::io(&paths[2], e))?;
    Ok(paths.to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrialMetric {
    Solved,
    Par(f64),
}

/// Per trial, tools in rank order with their metric value.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialTable {
    pub metric: TrialMetric,
    pub trials: Vec<Vec<(String, f64)>>,
}

impl TrialTable {
    pub fn new(per_trial: &[Vec<RunRecord>], metric: TrialMetric, limit: f64) -> TrialTable {
        let trials = per_trial
            .iter()
            .map(|rs| match metric {
                TrialMetric::Solved => rank_solved(rs, limit).into_iter().map(|r| (r.tool, r.solved as f64)).collect(),
                TrialMetric::Par(k) => rank_par(rs, k, limit).into_iter().map(|r| (r.tool, r.par_k.unwrap_or(0.0))).collect(),
            })
            .collect();
        TrialTable { metric, trials }
    }

    /// Every trial ranks the same tools.
    pub fn is_well_formed(&self) -> bool {
        let tools = |t: &Vec<(String, f64)>| t.iter().map(|(n, _)| n.clone()).collect::<BTreeSet<_>>();
        match self.trials.first() {
            Some(first) => !first.is_empty() && self.trials.iter().all(|t| t.len() == first.len() && tools(t) == tools(first)),
            None => false,
        }
    }

    /// Whether all trials produce the same order.
    pub fn rank_stable(&self) -> bool {
        let order = |t: &Vec<(String, f64)>| t.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        self.trials.windows(2).all(|w| order(&w[0]) == order(&w[1]))
    }

    /// Two-letter codes `AA`, `BB`, ... assigned by tool name.
    pub fn anonymized(&self) -> TrialTable {
        let names: BTreeSet<&String> = self.trials.iter().flatten().map(|(n, _)| n).collect();
        let code: BTreeMap<&String, String> =
            names.into_iter().enumerate().map(|(i, n)| (n, char::from(b'A' + (i % 26) as u8).to_string().repeat(2))).collect();
        TrialTable {
            metric: self.metric,
            trials: self.trials.iter().map(|t| t.iter().map(|(n, v)| (code[n].clone(), *v)).collect()).collect(),
        }
    }

    /// `rank,trial1,value1,...`, one row per rank position.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["rank".to_string()];
        for i in 1..=self.trials.len() {
            header.push(format!("trial{i}"));
            header.push(format!("value{i}"));
        }
        w.write_record(&header).map_err(csv_err)?;
        let rows = self.trials.iter().map(Vec::len).max().unwrap_or(0);
        for r in 0..rows {
            let mut row = vec![(r + 1).to_string()];
            for t in &self.trials {
                match t.get(r) {
                    Some((n, v)) => {
                        row.push(n.clone());
                        row.push(match self.metric {
                            TrialMetric::Solved => format!("{v}"),
                            TrialMetric::Par(_) => format!("{v:.0}"),
                        });
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::super::scoring::tests::rec;
    use super::*;
    use crate::solver::Status;

    fn text(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn inst(id: &str, family: &str) -> BenchmarkInstance {
        BenchmarkInstance { id: id.into(), path: PathBuf::new(), family: family.into(), digest: String::new(), expected: None }
    }

    #[test]
    fn cactus_rows() {
        let rs = vec![rec("t", "a", Status::Sat, 5.0), rec("t", "b", Status::Unsat, 1.0), rec("t", "c", Status::Unknown, 9.0)];
        assert_eq!(text(|b| write_cactus(b, &rs)), "tool,rank,time\nt,1,1\nt,2,5\n");
        assert_eq!(text(|b| write_cactus(b, &[])), "tool,rank,time\n");
    }

    #[test]
    fn family_table() {
        let insts: Vec<BenchmarkInstance> = (0..4).map(|i| inst(&format!("i{i}"), "fam1")).collect();
        let rs = vec![rec("T", "i0", Status::Sat, 1.0), rec("T", "i1", Status::Unknown, 1.0)];
        assert_eq!(text(|b| write_families(b, &rs, &insts)), "tool,fam1 (4)\nT,1\n");
        assert_eq!(text(|b| write_families(b, &[], &[])), "tool\n");
    }

    #[test]
    fn outputs_ignore_record_order() {
        let insts = vec![inst("a", "x"), inst("b", "y"), inst("c", "y")];
        let mut rs = vec![
            rec("p", "a", Status::Sat, 3.0),
            rec("p", "b", Status::Unknown, 10.0),
            rec("q", "a", Status::Sat, 1.0),
            rec("q", "c", Status::Unsat, 2.0),
            rec("q", "b", Status::Sat, 7.0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let read = |d: &Path| ["cactus.csv", "families.csv", "scores.csv"].map(|n| std::fs::read_to_string(d.join(n)).unwrap());
        emit_reports(&rs, &insts, 10.0, Some(10.0), &dir.path().join("1")).unwrap();
        rs.reverse();
        emit_reports(&rs, &insts, 10.0, Some(10.0), &dir.path().join("2")).unwrap();
        assert_eq!(read(&dir.path().join("1")), read(&dir.path().join("2")));
    }

    #[test]
    fn trial_table_shape() {
        let trials: Vec<Vec<RunRecord>> = (0..7)
            .map(|t| {
                vec![
                    rec("fast", "a", Status::Sat, 1.0),
                    rec("fast", "b", Status::Sat, 1.0 + t as f64),
                    rec("slow", "a", Status::Sat, 5.0),
                    rec("slow", "b", Status::Unknown, 10.0),
                ]
            })
            .collect();
        let table = TrialTable::new(&trials, TrialMetric::Solved, 10.0);
        assert!(table.is_well_formed() && table.rank_stable());
        let csv = text(|b| table.anonymized().write_csv(b));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,AA,2,AA,2"));
        assert_eq!(lines[0].split(',').count(), 15);
    }
}
