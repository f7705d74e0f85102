use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbfkit::cert::{check_trace_file, extract_certificate, validate_certificate, Certificate, CheckOptions, ValidateBudget};
use qbfkit::formula::{parse_qdimacs_with, write_qdimacs, DigestAlgorithm, ParseOptions, Pcnf};
use qbfkit::harness::{
    best_foot, detect_discrepancies, emit_reports, execute_runs, format_k, rank_par, rank_solved, read_records, register_benchmarks,
    stratified_sample, BenchmarkInstance, BenchmarkSet, Registry, RunLimits, RunRecord, ToolSet, TrialMetric, TrialTable,
};
use qbfkit::pipeline::{run_sequence, BundleSet, ExecutionSequence, FinalKind};
use qbfkit::prepro::{preprocess, OutcomeKind};
use qbfkit::solver::trace::read_proof;
use qbfkit::solver::{solve_expansion, solve_search, Limits, Status};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "qbfkit", version, about = "QBF solving, preprocessing, benchmarking and certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a QDIMACS file; exits 10 (SAT), 20 (UNSAT) or 0.
    Solve(SolveArgs),
    /// Run one preprocessing bundle.
    Prep(PrepArgs),
    /// Run an execution sequence of bundles for several rounds.
    Pipeline(PipelineArgs),
    /// Benchmark campaigns.
    #[command(subcommand)]
    Bench(Bench),
    /// Proof checking and certificates.
    #[command(subcommand)]
    Cert(Cert),
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Search,
    Expansion,
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "search")]
    engine: EngineArg,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time: Option<f64>,
    /// Memory budget, e.g. 512M or 7G.
    #[arg(long, value_parser = parse_size)]
    mem: Option<u64>,
    /// Write the proof trace here (search engine only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PrepArgs {
    input: PathBuf,
    #[arg(long, default_value = "A")]
    bundle: String,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    limit: f64,
    /// Bundle definitions (TOML); built-in A to D otherwise.
    #[arg(long)]
    bundles: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    input: PathBuf,
    /// Step labels, e.g. AABBCCDD or (A^2B^2C^2D^2)^6.
    #[arg(long)]
    seq: String,
    #[arg(long)]
    rounds: Option<u32>,
    /// Per-call wall-clock limit in seconds.
    #[arg(long, default_value_t = 120.0)]
    call_limit: f64,
    #[arg(long)]
    bundles: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "md5")]
    digest: DigestArg,
    /// Round reports as JSON lines; stdout if absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DigestArg {
    Md5,
    Sha256,
}

#[derive(Subcommand)]
enum Bench {
    /// Register every QDIMACS file under a directory.
    Register {
        root: PathBuf,
        #[arg(short, long, default_value = "registry.json")]
        output: PathBuf,
    },
    /// Draw k instances per family.
    Sample {
        registry: PathBuf,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long, default_value = "set.json")]
        output: PathBuf,
    },
    /// Run tools on a registry or sampled set, appending to a record log.
    Run {
        set: PathBuf,
        /// Tool table (TOML); both internal engines otherwise.
        #[arg(long)]
        tools: Option<PathBuf>,
        #[arg(long)]
        bundles: Option<PathBuf>,
        #[arg(long, default_value_t = 900.0)]
        time: f64,
        #[arg(long, value_parser = parse_size)]
        mem: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "runs.jsonl")]
        log: PathBuf,
        #[arg(long, default_value = "1")]
        trial: String,
    },
    /// Score table from a record log.
    Rank {
        log: PathBuf,
        #[arg(long, default_value_t = 900.0)]
        limit: f64,
        /// Rank by PAR-k instead of solved count.
        #[arg(long)]
        par: Option<f64>,
    },
    /// Compare a campaign on original inputs with one on preprocessed inputs.
    Bestfoot { original: PathBuf, preprocessed: PathBuf },
    /// Write cactus, family, score and per-trial CSVs plus discrepancies.
    Report {
        log: PathBuf,
        /// Registry or sampled set giving families and expected results.
        #[arg(long)]
        set: PathBuf,
        #[arg(long, default_value_t = 900.0)]
        limit: f64,
        #[arg(long)]
        par: Option<f64>,
        #[arg(short, long, default_value = "report")]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum Cert {
    /// Stream-check a proof trace against the formula.
    Check {
        input: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        retained_cap: usize,
    },
    /// Build a Skolem or Herbrand certificate from a checked proof.
    Extract {
        input: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Substitute a certificate into the formula and decide it.
    Validate {
        input: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 16)]
        exhaustive_bits: u32,
    },
}

fn parse_size(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let (num, mult) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 1u64 << 10),
        Some('M') => (&s[..s.len() - 1], 1 << 20),
        Some('G') => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    let n: f64 = num.parse().map_err(|_| format!("bad size {s:?}"))?;
    Ok((n * mult as f64) as u64)
}

fn read_formula(path: &Path) -> Result<Pcnf> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(parse_qdimacs_with(&bytes, ParseOptions { lenient: true }).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn load_bundles(path: &Option<PathBuf>) -> Result<BundleSet> {
    Ok(match path {
        Some(p) => BundleSet::from_toml(&std::fs::read_to_string(p)?)?,
        None => BundleSet::standard(),
    })
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn instances_of(path: &Path) -> Result<Vec<BenchmarkInstance>> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(set) = serde_json::from_str::<BenchmarkSet>(&text) {
        return Ok(set.instances);
    }
    Ok(serde_json::from_str::<Registry>(&text)?.instances)
}

fn status_code(s: Status) -> ExitCode {
    ExitCode::from(s.exit_code() as u8)
}

fn solve(a: SolveArgs) -> Result<ExitCode> {
    let f = read_formula(&a.input)?;
    let limits = Limits { time: a.time.map(Duration::from_secs_f64), memory: a.mem.map(|m| m as usize) };
    let out = match a.engine {
        EngineArg::Search => {
            let (out, proof) = solve_search(&f, limits, a.trace.is_some());
            if let (Some(path), Some(p)) = (&a.trace, proof) {
                std::fs::write(path, p.to_text())?;
            }
            out
        }
        EngineArg::Expansion => solve_expansion(&f, limits),
    };
    println!("s {}", out.status);
    println!("c wall {:.3}", out.wall_time);
    Ok(status_code(out.status))
}

fn prep(a: PrepArgs) -> Result<ExitCode> {
    let f = read_formula(&a.input)?;
    let bundles = load_bundles(&a.bundles)?;
    let bundle = match bundles.get(&a.bundle) {
        Some(qbfkit::pipeline::Bundle::Internal(b)) => b.clone(),
        Some(_) => return Err(format!("bundle {} is an external command; use `pipeline`", a.bundle).into()),
        None => return Err(format!("unknown bundle {}", a.bundle).into()),
    };
    let o = preprocess(&f, &bundle, Some(Duration::from_secs_f64(a.limit)));
    for (t, n) in &o.log {
        eprintln!("c {t} {n}");
    }
    let (text, status) = match &o.kind {
        OutcomeKind::Simplified(g) => (write_qdimacs(g), Status::Unknown),
        OutcomeKind::SolvedSat => ("p cnf 0 0\n".to_string(), Status::Sat),
        OutcomeKind::SolvedUnsat => ("p cnf 0 1\n0\n".to_string(), Status::Unsat),
    };
    write_out(&a.output, &text)?;
    Ok(status_code(status))
}

fn pipeline(a: PipelineArgs) -> Result<ExitCode> {
    let f = read_formula(&a.input)?;
    let bundles = load_bundles(&a.bundles)?;
    let mut seq = ExecutionSequence::parse(&a.seq)?.with_call_limit(Duration::from_secs_f64(a.call_limit));
    if let Some(r) = a.rounds {
        seq = seq.with_rounds(r)?;
    }
    let algorithm = match a.digest {
        DigestArg::Md5 => DigestAlgorithm::Md5,
        DigestArg::Sha256 => DigestAlgorithm::Sha256,
    };
    let mut sink: Box<dyn Write> = match &a.report {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut io_err = None;
    let r = run_sequence(&f, &seq, &bundles, algorithm, |round| {
        let line = serde_json::to_string(round).expect("reports serialize");
        if let Err(e) = writeln!(sink, "{line}").and_then(|_| sink.flush()) {
            io_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    let status = match &r.kind {
        FinalKind::SolvedSat => Status::Sat,
        FinalKind::SolvedUnsat => Status::Unsat,
        FinalKind::Fixpoint(g) | FinalKind::RoundsExhausted(g) => {
            if a.output.is_some() {
                write_out(&a.output, &write_qdimacs(g))?;
            }
            Status::Unknown
        }
    };
    Ok(status_code(status))
}

fn print_scores(records: &[RunRecord], limit: f64, par: Option<f64>) {
    let rows = match par {
        Some(k) => rank_par(records, k, limit),
        None => rank_solved(records, limit),
    };
    println!("{:<20} {:>6} {:>5} {:>5} {:>6} {:>9} {:>8} {:>9}", "tool", "solved", "sat", "unsat", "unique", "avg", "total", "par");
    for r in rows {
        let par = r.par_k.map(|p| format!("{p:.2}")).unwrap_or_default();
        println!(
            "{:<20} {:>6} {:>5} {:>5} {:>6} {:>9.2} {:>8} {:>9}",
            r.tool,
            r.solved,
            r.sat,
            r.unsat,
            r.unique,
            r.avg_solved_time,
            format_k(r.total_time),
            par
        );
    }
}

fn bench(b: Bench) -> Result<ExitCode> {
    match b {
        Bench::Register { root, output } => {
            let reg = register_benchmarks(&root)?;
            eprintln!(
                "{} instances in {} families, {} rejected, {} duplicate groups",
                reg.instances.len(),
                reg.families().len(),
                reg.rejected.len(),
                reg.duplicates.len()
            );
            std::fs::write(output, serde_json::to_string_pretty(&reg)?)?;
        }
        Bench::Sample { registry, k, seed, output } => {
            if k == 0 {
                return Err("k must be at least 1".into());
            }
            let reg: Registry = serde_json::from_str(&std::fs::read_to_string(registry)?)?;
            let set = stratified_sample(&reg, k, seed);
            eprintln!("{} instances", set.instances.len());
            std::fs::write(output, serde_json::to_string_pretty(&set)?)?;
        }
        Bench::Run { set, tools, bundles, time, mem, jobs, log, trial } => {
            let instances = instances_of(&set)?;
            let bundles = load_bundles(&bundles)?;
            let tools = match tools {
                Some(p) => ToolSet::from_toml(&std::fs::read_to_string(p)?, bundles)?,
                None => ToolSet { bundles, ..ToolSet::internal() },
            };
            let limits = RunLimits { time: Duration::from_secs_f64(time), memory: mem };
            let recs = execute_runs(&instances, &tools, limits, jobs, &log, &trial)?;
            eprintln!("{} records in trial {trial}", recs.len());
        }
        Bench::Rank { log, limit, par } => print_scores(&read_records(&log)?, limit, par),
        Bench::Bestfoot { original, preprocessed } => {
            let report = best_foot(&read_records(&original)?, &read_records(&preprocessed)?)?;
            println!("{:<20} {:<20} {:>9} {:>10}", "tool", "category", "best_foot", "worst_foot");
            for r in report {
                let cat = serde_json::to_value(r.category)?;
                println!("{:<20} {:<20} {:>9} {:>10}", r.tool, cat.as_str().unwrap_or_default(), r.best_foot, r.worst_foot);
            }
        }
        Bench::Report { log, set, limit, par, output } => {
            let records = read_records(&log)?;
            let instances = instances_of(&set)?;
            let mut by_trial: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
            for r in &records {
                by_trial.entry(r.trial.clone()).or_default().push(r.clone());
            }
            let latest: Vec<RunRecord> = by_trial.values().last().cloned().unwrap_or_default();
            let mut written = emit_reports(&latest, &instances, limit, par, &output)?;
            if by_trial.len() > 1 {
                let trials: Vec<Vec<RunRecord>> = by_trial.into_values().collect();
                for (name, metric) in [("trials_solved.csv", TrialMetric::Solved), ("trials_par.csv", TrialMetric::Par(par.unwrap_or(10.0)))] {
                    let table = TrialTable::new(&trials, metric, limit);
                    let path = output.join(name);
                    table.write_csv(File::create(&path)?)?;
                    eprintln!("{name}: rankings {}", if table.rank_stable() { "identical across trials" } else { "differ across trials" });
                    written.push(path);
                }
            }
            let expected = instances.iter().filter_map(|i| i.expected.map(|s| (i.id.clone(), s))).collect();
            let disc = detect_discrepancies(&records, &expected);
            let path = output.join("discrepancies.json");
            std::fs::write(&path, serde_json::to_string_pretty(&disc)?)?;
            written.push(path);
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            if !disc.is_empty() {
                eprintln!("{} instances with conflicting results", disc.len());
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cert(c: Cert) -> Result<ExitCode> {
    match c {
        Cert::Check { input, proof, retained_cap } => {
            let f = read_formula(&input)?;
            let report = check_trace_file(&proof, &f, CheckOptions { retained_cap })?;
            println!("{}", serde_json::to_string(&report)?);
            Ok(ExitCode::from(if report.accepted { 0 } else { 1 }))
        }
        Cert::Extract { input, proof, output } => {
            let f = read_formula(&input)?;
            let p = read_proof(BufReader::new(File::open(&proof)?))?;
            let c = extract_certificate(&p, &f)?;
            write_out(&output, &c.to_text())?;
            Ok(ExitCode::SUCCESS)
        }
        Cert::Validate { input, cert, exhaustive_bits } => {
            let f = read_formula(&input)?;
            let c = Certificate::parse(&std::fs::read_to_string(cert)?)?;
            let v = validate_certificate(&c, &f, ValidateBudget { exhaustive_bits, ..Default::default() })?;
            println!("{}", serde_json::to_string(&v)?);
            Ok(ExitCode::from(if v.valid { 0 } else { 1 }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Prep(a) => prep(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Bench(b) => bench(b),
        Command::Cert(c) => cert(c),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
