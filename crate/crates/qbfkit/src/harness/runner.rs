use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Deserialize;

use super::{BenchmarkInstance, HarnessError, RunRecord};
use crate::formula::{parse_qdimacs_with, ParseOptions};
use crate::pipeline::{run_sequence, BundleSet, ExecutionSequence, FinalKind, DEFAULT_CALL_LIMIT};
use crate::process::{run_limited, Termination};
use crate::solver::{solve_expansion, solve_search, Limits, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Search,
    Expansion,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ToolSpec {
    /// An engine of this crate, optionally behind a preprocessing sequence
    /// that shares the run's time limit.
    Internal { engine: Engine, sequence: Option<ExecutionSequence> },
    /// A command given the instance path as its last argument; exit 10/20
    /// report SAT/UNSAT.
    External { command: Vec<String> },
}

#[derive(Clone, Debug, Default)]
pub struct ToolSet {
    pub tools: BTreeMap<String, ToolSpec>,
    pub bundles: BundleSet,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToolEntry {
    engine: Option<Engine>,
    sequence: Option<String>,
    command: Option<Vec<String>>,
}

impl ToolSet {
    /// Parses a TOML tool table; bundle labels come from `bundles`.
    ///
    /// ```toml
    /// [search]
    /// engine = "search"
    ///
    /// [search-pre]
    /// engine = "search"
    /// sequence = "(ABCD)^6"
    ///
    /// [other]
    /// command = ["depqbf"]
    /// ```
    pub fn from_toml(text: &str, bundles: BundleSet) -> Result<ToolSet, HarnessError> {
        let raw: BTreeMap<String, ToolEntry> = toml::from_str(text).map_err(|e| HarnessError::Tools(e.to_string()))?;
        let mut tools = BTreeMap::new();
        for (name, e) in raw {
            let spec = match (e.engine, e.command) {
                (Some(engine), None) => {
                    let sequence = match e.sequence {
                        Some(s) => {
                            let seq = ExecutionSequence::parse(&s).map_err(|e| HarnessError::Tools(e.to_string()))?;
                            if let Some(l) = seq.steps().iter().find(|l| bundles.get(l).is_none()) {
                                return Err(HarnessError::Tools(format!("[{name}] uses unknown bundle {l}")));
                            }
                            Some(seq)
                        }
                        None => None,
                    };
                    ToolSpec::Internal { engine, sequence }
                }
                (None, Some(command)) if !command.is_empty() && e.sequence.is_none() => ToolSpec::External { command },
                _ => return Err(HarnessError::Tools(format!("[{name}] needs either `engine` or a nonempty `command`"))),
            };
            tools.insert(name, spec);
        }
        Ok(ToolSet { tools, bundles })
    }

    /// Both internal engines without preprocessing.
    pub fn internal() -> ToolSet {
        let mut tools = BTreeMap::new();
        tools.insert("search".to_string(), ToolSpec::Internal { engine: Engine::Search, sequence: None });
        tools.insert("expansion".to_string(), ToolSpec::Internal { engine: Engine::Expansion, sequence: None });
        ToolSet { tools, bundles: BundleSet::standard() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunLimits {
    pub time: Duration,
    pub memory: Option<u64>,
}

struct Run {
    status: Status,
    wall: Duration,
    mem: u64,
    exit: i32,
}

fn run_internal(engine: Engine, sequence: &Option<ExecutionSequence>, bundles: &BundleSet, inst: &BenchmarkInstance, limits: RunLimits) -> Run {
    let started = Instant::now();
    let unknown = |started: Instant| Run { status: Status::Unknown, wall: started.elapsed(), mem: 0, exit: 0 };
    let Ok(bytes) = std::fs::read(&inst.path) else { return unknown(started) };
    let Ok(mut f) = parse_qdimacs_with(&bytes, ParseOptions { lenient: true }) else { return unknown(started) };
    if let Some(seq) = sequence {
        let seq = seq.clone().with_call_limit(seq.per_call_limit.min(limits.time).min(DEFAULT_CALL_LIMIT));
        match run_sequence(&f, &seq, bundles, Default::default(), |_| {}) {
            Ok(r) => match r.kind {
                FinalKind::SolvedSat => return Run { status: Status::Sat, wall: started.elapsed(), mem: 0, exit: 10 },
                FinalKind::SolvedUnsat => return Run { status: Status::Unsat, wall: started.elapsed(), mem: 0, exit: 20 },
                FinalKind::Fixpoint(g) | FinalKind::RoundsExhausted(g) => f = g,
            },
            Err(e) => log::warn!("{}: {e}", inst.id),
        }
    }
    let Some(left) = limits.time.checked_sub(started.elapsed()) else { return unknown(started) };
    let l = Limits { time: Some(left), memory: limits.memory.map(|m| m as usize) };
    let out = match engine {
        Engine::Search => solve_search(&f, l, false).0,
        Engine::Expansion => solve_expansion(&f, l),
    };
    Run { status: out.status, wall: started.elapsed(), mem: 0, exit: out.status.exit_code() }
}

fn run_external(command: &[String], inst: &BenchmarkInstance, limits: RunLimits) -> Run {
    let mut argv = command.to_vec();
    argv.push(inst.path.display().to_string());
    match run_limited(&argv, b"", Some(limits.time), limits.memory) {
        Ok(o) => {
            let (status, exit) = match o.termination {
                Termination::Exited(c) => (Status::from_exit_code(c), c),
                _ => (Status::Unknown, -1),
            };
            Run { status, wall: o.wall_time, mem: o.peak_rss, exit }
        }
        Err(e) => {
            log::warn!("{}: cannot run {argv:?}: {e}", inst.id);
            Run { status: Status::Unknown, wall: Duration::ZERO, mem: 0, exit: -1 }
        }
    }
}

/// Reads a record log, tolerating a torn final line from an interrupted run.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(HarnessError::io(path, e)),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>().map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => log::warn!("{}: dropping torn last line", path.display()),
            Err(e) => return Err(HarnessError::Record { line: i + 1, message: e.to_string() }),
        }
    }
    Ok(out)
}

fn truncate_torn_tail(log: &Path) -> Result<(), HarnessError> {
    let Ok(bytes) = std::fs::read(log) else { return Ok(()) };
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    std::fs::write(log, &bytes[..keep]).map_err(|e| HarnessError::io(log, e))
}

/// Runs every tool on every instance with `workers` threads, appending one
/// JSON line per finished run to `log`. Runs already in the log for this
/// trial are not repeated. Returns the records of this trial, old and new.
pub fn execute_runs(
    instances: &[BenchmarkInstance],
    tools: &ToolSet,
    limits: RunLimits,
    workers: usize,
    log: &Path,
    trial: &str,
) -> Result<Vec<RunRecord>, HarnessError> {
    let previous: Vec<RunRecord> = read_records(log)?.into_iter().filter(|r| r.trial == trial).collect();
    let done: BTreeSet<(String, String)> = previous.iter().map(|r| (r.tool.clone(), r.instance.clone())).collect();
    let jobs: Vec<(&String, &ToolSpec, &BenchmarkInstance)> = tools
        .tools
        .iter()
        .flat_map(|(name, spec)| instances.iter().map(move |i| (name, spec, i)))
        .filter(|(name, _, i)| !done.contains(&((*name).clone(), i.id.clone())))
        .collect();

    truncate_torn_tail(log)?;
    let mut file = OpenOptions::new().create(true).append(true).open(log).map_err(|e| HarnessError::io(log, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Tools(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<RunRecord>();
    let fresh = std::thread::scope(|s| {
        let writer = s.spawn(move || -> std::io::Result<Vec<RunRecord>> {
            let mut got = Vec::new();
            for r in rx {
                let line = serde_json::to_string(&r).expect("records serialize");
                writeln!(file, "{line}")?;
                file.flush()?;
                got.push(r);
            }
            Ok(got)
        });
        pool.install(|| {
            jobs.par_iter().for_each_with(tx, |tx, (name, spec, inst)| {
                let started = Instant::now();
                let run = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| match spec {
                    ToolSpec::Internal { engine, sequence } => run_internal(*engine, sequence, &tools.bundles, inst, limits),
                    ToolSpec::External { command } => run_external(command, inst, limits),
                }))
                .unwrap_or_else(|_| Run { status: Status::Unknown, wall: started.elapsed(), mem: 0, exit: -1 });
                let _ = tx.send(RunRecord {
                    tool: (*name).clone(),
                    instance: inst.id.clone(),
                    family: inst.family.clone(),
                    status: run.status,
                    wall_s: run.wall.as_secs_f64(),
                    mem_bytes: run.mem,
                    exit: run.exit,
                    trial: trial.to_string(),
                });
            });
        });
        writer.join().expect("writer thread")
    });
    let mut all = previous;
    all.extend(fresh.map_err(|e| HarnessError::io(log, e))?);
    all.sort_by(|a, b| (&a.tool, &a.instance).cmp(&(&b.tool, &b.instance)));
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(dir: &Path, name: &str, text: &str) -> BenchmarkInstance {
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        BenchmarkInstance { id: name.into(), path, family: "f".into(), digest: String::new(), expected: None }
    }

    #[test]
    fn internal_runs_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let insts = vec![
            instance(dir.path(), "a", "p cnf 1 1\ne 1 0\n1 0\n"),
            instance(dir.path(), "b", "p cnf 1 1\na 1 0\n1 0\n"),
            instance(dir.path(), "c", "p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n"),
        ];
        let log = dir.path().join("runs.jsonl");
        let limits = RunLimits { time: Duration::from_secs(900), memory: None };
        let recs = execute_runs(&insts, &ToolSet::internal(), limits, 2, &log, "1").unwrap();
        assert_eq!(recs.len(), 6);
        let a = recs.iter().find(|r| r.tool == "search" && r.instance == "a").unwrap();
        assert_eq!((a.status, a.exit), (Status::Sat, 10));
        assert!(recs.iter().filter(|r| r.instance == "b").all(|r| r.status == Status::Unsat));
        // nothing left to do on the second call
        let again = execute_runs(&insts, &ToolSet::internal(), limits, 2, &log, "1").unwrap();
        assert_eq!(again, recs);
        assert_eq!(read_records(&log).unwrap().len(), 6);
        let json: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&log).unwrap().lines().next().unwrap()).unwrap();
        let keys: BTreeSet<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["exit", "family", "instance", "mem_bytes", "status", "tool", "trial", "wall_s"].into_iter().collect());
    }

    #[test]
    fn external_timeout_is_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let insts = vec![instance(dir.path(), "a", "p cnf 1 1\ne 1 0\n1 0\n")];
        let cfg = "[sleepy]\ncommand = [\"sh\", \"-c\", \"sleep 5\", \"sh\"]\n[ten]\ncommand = [\"sh\", \"-c\", \"exit 10\", \"sh\"]\n";
        let tools = ToolSet::from_toml(cfg, BundleSet::standard()).unwrap();
        let limits = RunLimits { time: Duration::from_millis(300), memory: None };
        let recs = execute_runs(&insts, &tools, limits, 2, &dir.path().join("log"), "t").unwrap();
        let sleepy = recs.iter().find(|r| r.tool == "sleepy").unwrap();
        assert_eq!((sleepy.status, sleepy.exit), (Status::Unknown, -1));
        assert!(sleepy.wall_s >= 0.3 && sleepy.wall_s < 3.0);
        assert_eq!(recs.iter().find(|r| r.tool == "ten").unwrap().status, Status::Sat);
    }

    #[test]
    fn tool_config_errors() {
        let b = BundleSet::standard();
        assert!(ToolSet::from_toml("[x]\nengine = \"search\"\nsequence = \"(AZ)^2\"\n", b.clone()).is_err());
        assert!(ToolSet::from_toml("[x]\n", b.clone()).is_err());
        let t = ToolSet::from_toml("[x]\nengine = \"expansion\"\nsequence = \"ABCD\"\n", b).unwrap();
        assert!(matches!(&t.tools["x"], ToolSpec::Internal { engine: Engine::Expansion, sequence: Some(_) }));
    }

    #[test]
    fn torn_last_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log");
        std::fs::write(&p, "{\"tool\":\"t\",\"instance\":\"i\",\"family\":\"f\",\"status\":\"SAT\",\"wall_s\":1.0,\"mem_bytes\":0,\"exit\":10,\"trial\":\"1\"}\n{\"tool\":").unwrap();
        assert_eq!(read_records(&p).unwrap().len(), 1);
        std::fs::write(&p, "garbage\n{}\n").unwrap();
        assert!(read_records(&p).is_err());
        std::fs::write(&p, "{\"tool\":").unwrap();
        truncate_torn_tail(&p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"");
    }
}
