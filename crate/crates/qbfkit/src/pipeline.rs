//! Multi-round preprocessing chains with pass-through on failure and
//! digest-based fixpoint detection.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::formula::{canonical_digest_with, parse_qdimacs, write_qdimacs, CanonicalDigest, Clause, DigestAlgorithm, Pcnf, Prefix};
use crate::prepro::{preprocess, Budgets, OutcomeKind, PreproError, Technique, ToolBundle};
use crate::process::{run_limited, Termination};

pub const DEFAULT_CALL_LIMIT: Duration = Duration::from_secs(120);
pub const DEFAULT_ROUNDS: u32 = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PipelineError {
    #[error("execution sequence {0:?}: {1}")]
    Sequence(String, &'static str),
    #[error("unknown bundle label {0}")]
    UnknownLabel(String),
    #[error("bundle config: {0}")]
    Config(String),
    #[error(transparent)]
    Bundle(#[from] PreproError),
    #[error("cannot compare a {0:?} digest with a {1:?} digest")]
    AlgorithmMismatch(DigestAlgorithm, DigestAlgorithm),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionSequence {
    steps: Vec<String>,
    pub max_rounds: u32,
    pub per_call_limit: Duration,
}

impl ExecutionSequence {
    pub fn new(steps: Vec<String>, max_rounds: u32, per_call_limit: Duration) -> Result<ExecutionSequence, PipelineError> {
        if steps.is_empty() {
            return Err(PipelineError::Sequence(String::new(), "no steps"));
        }
        if max_rounds == 0 {
            return Err(PipelineError::Sequence(steps.concat(), "at least one round is required"));
        }
        Ok(ExecutionSequence { steps, max_rounds, per_call_limit })
    }

    pub fn steps(&self) -> &[String] {
        &self.steps
    }

    /// Parses `AABBCCDD`, `A,B,C`, `A^2B^2` or `(A^2B^2C^2D^2)^6`. Labels are
    /// single characters unless separated by commas. An outer `^n` sets the
    /// round count, otherwise the default applies.
    pub fn parse(text: &str) -> Result<ExecutionSequence, PipelineError> {
        let bad = |m| PipelineError::Sequence(text.to_string(), m);
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let (body, rounds) = match s.strip_prefix('(') {
            Some(rest) => {
                let (body, tail) = rest.split_once(')').ok_or_else(|| bad("unbalanced parenthesis"))?;
                let rounds = match tail.strip_prefix('^') {
                    Some(n) => n.parse().map_err(|_| bad("bad round count"))?,
                    None if tail.is_empty() => DEFAULT_ROUNDS,
                    None => return Err(bad("unexpected text after ')'")),
                };
                (body.to_string(), rounds)
            }
            None => (s, DEFAULT_ROUNDS),
        };
        let mut steps = Vec::new();
        let tokens: Vec<String> = if body.contains(',') {
            body.split(',').map(str::to_string).collect()
        } else {
            let mut toks: Vec<String> = Vec::new();
            let mut chars = body.chars().peekable();
            while let Some(c) = chars.next() {
                let mut t = c.to_string();
                if chars.peek() == Some(&'^') {
                    t.push(chars.next().unwrap_or('^'));
                    while let Some(d) = chars.next_if(char::is_ascii_digit) {
                        t.push(d);
                    }
                }
                toks.push(t);
            }
            toks
        };
        for t in tokens {
            let (label, reps) = match t.split_once('^') {
                Some((l, n)) => (l.to_string(), n.parse::<usize>().map_err(|_| bad("bad repetition count"))?),
                None => (t, 1),
            };
            if label.is_empty() || !label.chars().all(char::is_alphanumeric) {
                return Err(bad("labels must be alphanumeric"));
            }
            steps.extend(std::iter::repeat_n(label, reps));
        }
        ExecutionSequence::new(steps, rounds, DEFAULT_CALL_LIMIT).map_err(|_| bad("empty sequence or zero rounds"))
    }

    pub fn with_rounds(mut self, rounds: u32) -> Result<ExecutionSequence, PipelineError> {
        self.max_rounds = rounds;
        ExecutionSequence::new(self.steps, self.max_rounds, self.per_call_limit)
    }

    pub fn with_call_limit(mut self, limit: Duration) -> ExecutionSequence {
        self.per_call_limit = limit;
        self
    }
}

/// A preprocessing step: one of our own bundles, or an external command that
/// reads QDIMACS on stdin and writes QDIMACS on stdout (exit 10 or 20 when it
/// decides the formula).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bundle {
    Internal(ToolBundle),
    External { name: String, command: Vec<String> },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BundleSet {
    bundles: BTreeMap<String, Bundle>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleEntry {
    techniques: Option<Vec<String>>,
    command: Option<Vec<String>>,
    #[serde(default = "yes")]
    fixpoint: bool,
    var_elim_budget: Option<usize>,
    expansion_budget: Option<usize>,
}

fn yes() -> bool {
    true
}

impl BundleSet {
    /// Built-in bundles `A` to `D`.
    pub fn standard() -> BundleSet {
        let mut s = BundleSet::default();
        for l in "ABCD".chars() {
            s.insert(Bundle::Internal(ToolBundle::standard(l).expect("built-in label")));
        }
        s
    }

    pub fn insert(&mut self, b: Bundle) {
        let name = match &b {
            Bundle::Internal(t) => t.name.clone(),
            Bundle::External { name, .. } => name.clone(),
        };
        self.bundles.insert(name, b);
    }

    pub fn get(&self, label: &str) -> Option<&Bundle> {
        self.bundles.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.bundles.keys().map(String::as_str)
    }

    /// Reads a TOML table per label:
    ///
    /// ```toml
    /// [A]
    /// techniques = ["universal_reduction", "subsumption"]
    /// fixpoint = true
    ///
    /// [E]
    /// command = ["bloqqer", "--keep=0"]
    /// ```
    ///
    /// Labels defined here replace the built-in ones of the same name.
    pub fn from_toml(text: &str) -> Result<BundleSet, PipelineError> {
        let raw: BTreeMap<String, BundleEntry> = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut set = BundleSet::standard();
        for (name, e) in raw {
            let bundle = match (e.techniques, e.command) {
                (Some(ts), None) => {
                    let ts = ts.iter().map(|t| t.parse::<Technique>()).collect::<Result<Vec<_>, _>>()?;
                    let budgets = Budgets {
                        var_elim: e.var_elim_budget.unwrap_or(0),
                        expansion: e.expansion_budget,
                    };
                    Bundle::Internal(ToolBundle::new(name.clone(), ts, e.fixpoint)?.with_budgets(budgets))
                }
                (None, Some(command)) if !command.is_empty() => Bundle::External { name: name.clone(), command },
                _ => return Err(PipelineError::Config(format!("[{name}] needs exactly one nonempty `techniques` or `command`"))),
            };
            set.insert(bundle);
        }
        Ok(set)
    }
}

fn as_text<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn as_secs<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub label: String,
    pub modified: bool,
    pub solved: Option<Verdict>,
    pub failed: bool,
    pub timed_out: bool,
    #[serde(rename = "wall_s", serialize_with = "as_secs")]
    pub wall_time: Duration,
    /// For reporting only; fixpoints are decided on round digests.
    #[serde(serialize_with = "as_text")]
    pub digest_after: CanonicalDigest,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundReport {
    pub round: u32,
    #[serde(serialize_with = "as_text")]
    pub digest_before: CanonicalDigest,
    #[serde(serialize_with = "as_text")]
    pub digest_after: CanonicalDigest,
    pub steps: Vec<StepReport>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FinalKind {
    SolvedSat,
    SolvedUnsat,
    Fixpoint(Pcnf),
    RoundsExhausted(Pcnf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineResult {
    pub kind: FinalKind,
    pub rounds: Vec<RoundReport>,
    pub solved_in_round: Option<u32>,
}

impl PipelineResult {
    pub fn formula(&self) -> Option<&Pcnf> {
        match &self.kind {
            FinalKind::Fixpoint(f) | FinalKind::RoundsExhausted(f) => Some(f),
            _ => None,
        }
    }
}

/// True iff the digests are byte-equal.
pub fn detect_fixpoint(before: &CanonicalDigest, after: &CanonicalDigest) -> Result<bool, PipelineError> {
    if before.algorithm != after.algorithm {
        return Err(PipelineError::AlgorithmMismatch(before.algorithm, after.algorithm));
    }
    Ok(before.bytes == after.bytes)
}

enum StepResult {
    Formula(Pcnf),
    Solved(Verdict),
    Failed,
    TimedOut,
}

fn run_external(command: &[String], f: &Pcnf, limit: Duration) -> StepResult {
    let out = match run_limited(command, write_qdimacs(f).as_bytes(), Some(limit), None) {
        Ok(o) => o,
        Err(e) => {
            log::warn!("cannot run {command:?}: {e}");
            return StepResult::Failed;
        }
    };
    match out.termination {
        Termination::Timeout => StepResult::TimedOut,
        Termination::Exited(10) => StepResult::Solved(Verdict::Sat),
        Termination::Exited(20) => StepResult::Solved(Verdict::Unsat),
        Termination::Exited(0) => match parse_qdimacs(&out.stdout[..]) {
            Ok(g) => StepResult::Formula(g),
            Err(e) => {
                log::warn!("{command:?} wrote unreadable output: {e}");
                StepResult::Failed
            }
        },
        other => {
            log::warn!("{command:?} ended with {other:?}");
            StepResult::Failed
        }
    }
}

fn run_step(bundle: &Bundle, f: &Pcnf, limit: Duration) -> StepResult {
    match bundle {
        Bundle::Internal(b) => {
            let o = preprocess(f, b, Some(limit));
            if o.failed {
                return StepResult::Failed;
            }
            if o.timed_out {
                return StepResult::TimedOut;
            }
            match o.kind {
                OutcomeKind::SolvedSat => StepResult::Solved(Verdict::Sat),
                OutcomeKind::SolvedUnsat => StepResult::Solved(Verdict::Unsat),
                OutcomeKind::Simplified(g) => StepResult::Formula(g),
            }
        }
        Bundle::External { command, .. } => run_external(command, f, limit),
    }
}

/// Stand-in formulas for solved states, so every step has a digest.
fn trivial(v: Verdict) -> Pcnf {
    let clauses = match v {
        Verdict::Sat => Vec::new(),
        Verdict::Unsat => vec![Clause::new(Vec::new())],
    };
    Pcnf::new(Prefix::default(), clauses).expect("no variables")
}

/// Runs the step list round after round. Each round starts and ends with a
/// digest of the normalized formula; the normalized form is never forwarded.
/// `on_round` sees each report as soon as the round ends.
pub fn run_sequence(
    f: &Pcnf,
    seq: &ExecutionSequence,
    bundles: &BundleSet,
    algorithm: DigestAlgorithm,
    mut on_round: impl FnMut(&RoundReport),
) -> Result<PipelineResult, PipelineError> {
    for l in &seq.steps {
        if bundles.get(l).is_none() {
            return Err(PipelineError::UnknownLabel(l.clone()));
        }
    }
    let mut current = f.clone();
    let mut rounds = Vec::new();
    for round in 1..=seq.max_rounds {
        let digest_before = canonical_digest_with(&current, algorithm);
        let mut steps = Vec::new();
        let mut solved = None;
        for l in &seq.steps {
            let started = Instant::now();
            let result = run_step(bundles.get(l).expect("checked above"), &current, seq.per_call_limit);
            let (mut failed, mut timed_out, mut modified) = (false, false, false);
            match result {
                StepResult::Formula(g) => {
                    modified = g != current;
                    current = g;
                }
                StepResult::Solved(v) => solved = Some(v),
                StepResult::Failed => failed = true,
                StepResult::TimedOut => timed_out = true,
            }
            let digest_after = match solved {
                Some(v) => canonical_digest_with(&trivial(v), algorithm),
                None => canonical_digest_with(&current, algorithm),
            };
            steps.push(StepReport {
                label: l.clone(),
                modified: modified || solved.is_some(),
                solved,
                failed,
                timed_out,
                wall_time: started.elapsed(),
                digest_after,
            });
            if solved.is_some() {
                break;
            }
        }
        let digest_after = steps.last().map(|s| s.digest_after.clone()).unwrap_or_else(|| digest_before.clone());
        let report = RoundReport { round, digest_before, digest_after, steps };
        on_round(&report);
        let fixpoint = detect_fixpoint(&report.digest_before, &report.digest_after)?;
        rounds.push(report);
        if let Some(v) = solved {
            let kind = match v {
                Verdict::Sat => FinalKind::SolvedSat,
                Verdict::Unsat => FinalKind::SolvedUnsat,
            };
            return Ok(PipelineResult { kind, rounds, solved_in_round: Some(round) });
        }
        if fixpoint {
            return Ok(PipelineResult { kind: FinalKind::Fixpoint(current), rounds, solved_in_round: None });
        }
    }
    Ok(PipelineResult { kind: FinalKind::RoundsExhausted(current), rounds, solved_in_round: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::canonical_digest;

    fn pcnf(text: &str) -> Pcnf {
        parse_qdimacs(text.as_bytes()).unwrap()
    }

    #[test]
    fn sequence_syntax() {
        let s = ExecutionSequence::parse("(A^2B^2C^2D^2)^6").unwrap();
        assert_eq!(s.steps().concat(), "AABBCCDD");
        assert_eq!(s.max_rounds, 6);
        assert_eq!(s.per_call_limit, Duration::from_secs(120));
        assert_eq!(ExecutionSequence::parse("AABBCCDD").unwrap().steps().len(), 8);
        assert_eq!(ExecutionSequence::parse("(ABCD)^3").unwrap().max_rounds, 3);
        assert_eq!(ExecutionSequence::parse("bq,E").unwrap().steps(), ["bq", "E"]);
        assert!(ExecutionSequence::parse("").is_err());
        assert!(ExecutionSequence::parse("(AB)^0").is_err());
        assert!(ExecutionSequence::parse("(AB").is_err());
    }

    #[test]
    fn digests_and_fixpoints() {
        let f = pcnf("p cnf 3 2\ne 1 2 3 0\n1 2 0\n2 3 0\n");
        let g = pcnf("p cnf 3 2\ne 1 2 3 0\n3 2 0\n2 1 0\n");
        let h = pcnf("p cnf 3 1\ne 1 2 3 0\n1 2 0\n");
        assert!(detect_fixpoint(&canonical_digest(&f), &canonical_digest(&g)).unwrap());
        assert!(!detect_fixpoint(&canonical_digest(&f), &canonical_digest(&h)).unwrap());
        let sha = canonical_digest_with(&f, DigestAlgorithm::Sha256);
        assert!(matches!(detect_fixpoint(&canonical_digest(&f), &sha), Err(PipelineError::AlgorithmMismatch(..))));
    }

    #[test]
    fn unchanged_formula_reaches_fixpoint_in_round_one() {
        // nothing to reduce, subsume or propagate; every variable is bound deeper than a universal
        let f = pcnf("p cnf 3 2\na 1 0\ne 2 3 0\n1 2 3 0\n-1 -2 -3 0\n");
        let seq = ExecutionSequence::parse("A").unwrap();
        let r = run_sequence(&f, &seq, &BundleSet::standard(), DigestAlgorithm::Md5, |_| {}).unwrap();
        let FinalKind::Fixpoint(g) = &r.kind else { panic!("{:?}", r.kind) };
        assert_eq!(canonical_digest(g), canonical_digest(&f));
        assert_eq!(r.rounds.len(), 1);
        assert_eq!(r.rounds[0].digest_before, r.rounds[0].digest_after);
    }

    #[test]
    fn universal_unit_is_solved_in_round_one() {
        let f = pcnf("p cnf 1 1\na 1 0\n1 0\n");
        let seq = ExecutionSequence::parse("ABCD").unwrap();
        let r = run_sequence(&f, &seq, &BundleSet::standard(), DigestAlgorithm::Md5, |_| {}).unwrap();
        assert_eq!(r.kind, FinalKind::SolvedUnsat);
        assert_eq!(r.solved_in_round, Some(1));
        assert_eq!(r.rounds[0].steps.len(), 1);
    }

    #[test]
    fn unknown_label_fails_before_running() {
        let f = pcnf("p cnf 1 1\na 1 0\n1 0\n");
        let seq = ExecutionSequence::parse("AZ").unwrap();
        let mut seen = 0;
        let r = run_sequence(&f, &seq, &BundleSet::standard(), DigestAlgorithm::Md5, |_| seen += 1);
        assert_eq!(r, Err(PipelineError::UnknownLabel("Z".into())));
        assert_eq!(seen, 0);
    }

    #[test]
    fn config_file() {
        let s = BundleSet::from_toml(
            "[A]\ntechniques = [\"unit\"]\nfixpoint = false\n[E]\ncommand = [\"cat\"]\n[F]\ntechniques = [\"var_elim\"]\nvar_elim_budget = 3\n",
        )
        .unwrap();
        assert!(matches!(s.get("A"), Some(Bundle::Internal(b)) if b.techniques() == [Technique::Unit] && !b.fixpoint));
        assert!(matches!(s.get("E"), Some(Bundle::External { .. })));
        assert!(matches!(s.get("F"), Some(Bundle::Internal(b)) if b.budgets.var_elim == 3));
        assert!(s.get("B").is_some());
        assert!(BundleSet::from_toml("[X]\ntechniques = []\n").is_err());
        assert!(BundleSet::from_toml("[X]\ntechniques = [\"bce\"]\n").is_err());
        assert!(BundleSet::from_toml("[X]\ncommand = [\"cat\"]\ntechniques = [\"unit\"]\n").is_err());
    }

    #[test]
    fn external_tools_and_pass_through() {
        let f = pcnf("p cnf 3 2\na 1 0\ne 2 3 0\n1 2 3 0\n-1 -2 -3 0\n");
        let mut set = BundleSet::standard();
        set.insert(Bundle::External { name: "S".into(), command: vec!["sleep".into(), "5".into()] });
        set.insert(Bundle::External { name: "X".into(), command: vec!["false".into()] });
        set.insert(Bundle::External { name: "C".into(), command: vec!["cat".into()] });
        let seq = ExecutionSequence::parse("SXC").unwrap().with_call_limit(Duration::from_millis(200));
        let r = run_sequence(&f, &seq, &set, DigestAlgorithm::Md5, |_| {}).unwrap();
        let steps = &r.rounds[0].steps;
        assert!(steps[0].timed_out && steps[1].failed && !steps[2].modified);
        assert!(steps.iter().all(|s| s.digest_after == r.rounds[0].digest_before));
        assert_eq!(r.kind, FinalKind::Fixpoint(f));
    }

    #[test]
    fn round_report_json() {
        let f = pcnf("p cnf 1 1\na 1 0\n1 0\n");
        let seq = ExecutionSequence::parse("A").unwrap();
        let r = run_sequence(&f, &seq, &BundleSet::standard(), DigestAlgorithm::Md5, |_| {}).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r.rounds[0]).unwrap();
        assert_eq!(v["round"], 1);
        assert!(v["digest_before"].as_str().unwrap().starts_with("md5:"));
        assert_eq!(v["steps"][0]["solved"], "unsat");
    }
}
