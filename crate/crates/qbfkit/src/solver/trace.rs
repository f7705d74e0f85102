//! Resolution traces and proofs.
//!
//! File format, one item per line:
//!
//! ```text
//! p qrp <max_var> <num_steps> refutation|satisfaction
//! i <id> <clause_index>        input clause (0-based index into the matrix)
//! i <id> -                     input cube
//! <id> <lit>* 0 <antecedent>* 0
//! r <root_id> refutation|satisfaction
//! ```
//!
//! Step kinds are implicit: preamble ids are inputs, two antecedents mean a
//! resolution whose pivot is the single clashing variable, one antecedent
//! means a reduction. Refutations hold clause steps, satisfactions cube steps.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::io::BufRead;

use thiserror::Error;

use crate::formula::Literal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    InputClause,
    Resolution,
    UniversalReduction,
    InputCube,
    CubeResolution,
    ExistentialReduction,
}

impl StepKind {
    pub fn is_cube(self) -> bool {
        matches!(self, StepKind::InputCube | StepKind::CubeResolution | StepKind::ExistentialReduction)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub id: u32,
    pub kind: StepKind,
    pub antecedents: Vec<u32>,
    pub pivot: Option<u32>,
    pub lits: Vec<Literal>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProofKind {
    Refutation,
    Satisfaction,
}

impl ProofKind {
    pub fn name(self) -> &'static str {
        match self {
            ProofKind::Refutation => "refutation",
            ProofKind::Satisfaction => "satisfaction",
        }
    }

    fn parse(s: &str) -> Option<ProofKind> {
        match s {
            "refutation" => Some(ProofKind::Refutation),
            "satisfaction" => Some(ProofKind::Satisfaction),
            _ => None,
        }
    }
}

impl fmt::Display for ProofKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A derivation of the empty clause or the empty cube.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proof {
    pub kind: ProofKind,
    pub max_var: u32,
    /// Ordered so that antecedents precede their consumers.
    pub steps: Vec<TraceStep>,
    pub root: u32,
    /// Input clause step id to matrix clause index.
    pub input_map: BTreeMap<u32, usize>,
}

impl Proof {
    pub fn num_resolutions(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s.kind, StepKind::Resolution | StepKind::CubeResolution)).count()
    }

    pub fn max_width(&self) -> usize {
        self.steps.iter().map(|s| s.lits.len()).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p qrp {} {} {}", self.max_var, self.steps.len(), self.kind);
        for s in &self.steps {
            match s.kind {
                StepKind::InputClause => {
                    let idx = self.input_map.get(&s.id).copied().unwrap_or(usize::MAX);
                    let _ = writeln!(out, "i {} {}", s.id, idx);
                }
                StepKind::InputCube => {
                    let _ = writeln!(out, "i {} -", s.id);
                }
                _ => {}
            }
        }
        for s in &self.steps {
            let _ = write!(out, "{}", s.id);
            for l in &s.lits {
                let _ = write!(out, " {l}");
            }
            out.push_str(" 0");
            for a in &s.antecedents {
                let _ = write!(out, " {a}");
            }
            out.push_str(" 0\n");
        }
        let _ = writeln!(out, "r {} {}", self.root, self.kind);
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// One line of a trace file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceLine {
    Header { max_var: u32, num_steps: usize, kind: ProofKind },
    Input { id: u32, clause: Option<usize> },
    Step { id: u32, lits: Vec<Literal>, antecedents: Vec<u32> },
    Root { id: u32, kind: ProofKind },
}

pub fn parse_trace_line(text: &str, line: usize) -> Result<Option<TraceLine>, TraceParseError> {
    let bad = |m: &str| TraceParseError { line, message: m.to_string() };
    let t = text.trim();
    if t.is_empty() || t.starts_with('c') {
        return Ok(None);
    }
    let mut tok = t.split_whitespace();
    let first = tok.next().unwrap_or_default();
    match first {
        "p" => {
            if tok.next() != Some("qrp") {
                return Err(bad("expected 'p qrp'"));
            }
            let max_var = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad max_var"))?;
            let num_steps = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad step count"))?;
            let kind = tok.next().and_then(ProofKind::parse).ok_or_else(|| bad("bad proof kind"))?;
            Ok(Some(TraceLine::Header { max_var, num_steps, kind }))
        }
        "i" => {
            let id = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad input id"))?;
            let clause = match tok.next() {
                Some("-") => None,
                Some(s) => Some(s.parse().map_err(|_| bad("bad clause index"))?),
                None => return Err(bad("missing clause index")),
            };
            Ok(Some(TraceLine::Input { id, clause }))
        }
        "r" => {
            let id = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad root id"))?;
            let kind = tok.next().and_then(ProofKind::parse).ok_or_else(|| bad("bad proof kind"))?;
            Ok(Some(TraceLine::Root { id, kind }))
        }
        _ => {
            let id: u32 = first.parse().map_err(|_| bad("bad step id"))?;
            let mut lits = Vec::new();
            let mut ants = Vec::new();
            let mut zeros = 0;
            for s in tok {
                let v: i64 = s.parse().map_err(|_| bad("bad number"))?;
                if v == 0 {
                    zeros += 1;
                    continue;
                }
                match zeros {
                    0 => lits.push(
                        i32::try_from(v).ok().and_then(Literal::from_dimacs).ok_or_else(|| bad("literal out of range"))?,
                    ),
                    1 => ants.push(u32::try_from(v).map_err(|_| bad("bad antecedent id"))?),
                    _ => return Err(bad("trailing tokens after step")),
                }
            }
            if zeros != 2 {
                return Err(bad("step must have two 0 terminators"));
            }
            Ok(Some(TraceLine::Step { id, lits, antecedents: ants }))
        }
    }
}

/// Reads a whole trace into memory, inferring kinds and pivots.
pub fn read_proof<R: BufRead>(reader: R) -> Result<Proof, TraceParseError> {
    let mut header = None;
    let mut inputs: HashMap<u32, Option<usize>> = HashMap::new();
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut by_id: HashMap<u32, usize> = HashMap::new();
    let mut root = None;
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| TraceParseError { line: n, message: e.to_string() })?;
        let Some(item) = parse_trace_line(&line, n)? else { continue };
        match item {
            TraceLine::Header { max_var, kind, .. } => header = Some((max_var, kind)),
            TraceLine::Input { id, clause } => {
                inputs.insert(id, clause);
            }
            TraceLine::Step { id, lits, antecedents } => {
                let (_, kind) = header.ok_or(TraceParseError { line: n, message: "step before header".into() })?;
                let cube = kind == ProofKind::Satisfaction;
                let step_kind = match (inputs.contains_key(&id), antecedents.len(), cube) {
                    (true, _, false) => StepKind::InputClause,
                    (true, _, true) => StepKind::InputCube,
                    (false, 2, false) => StepKind::Resolution,
                    (false, 2, true) => StepKind::CubeResolution,
                    (false, _, false) => StepKind::UniversalReduction,
                    (false, _, true) => StepKind::ExistentialReduction,
                };
                let pivot = if antecedents.len() == 2 {
                    let a = by_id.get(&antecedents[0]).map(|&k| &steps[k].lits);
                    let b = by_id.get(&antecedents[1]).map(|&k| &steps[k].lits);
                    match (a, b) {
                        (Some(a), Some(b)) => clash(a, b),
                        _ => None,
                    }
                } else {
                    None
                };
                by_id.insert(id, steps.len());
                steps.push(TraceStep { id, kind: step_kind, antecedents, pivot, lits });
            }
            TraceLine::Root { id, .. } => root = Some(id),
        }
    }
    let (max_var, kind) = header.ok_or(TraceParseError { line: 0, message: "missing header".into() })?;
    let root = root.ok_or(TraceParseError { line: 0, message: "missing root line".into() })?;
    let input_map = inputs.into_iter().filter_map(|(id, c)| c.map(|c| (id, c))).collect();
    Ok(Proof { kind, max_var, steps, root, input_map })
}

/// The unique variable occurring with opposite signs in `a` and `b`, if any.
pub(crate) fn clash(a: &[Literal], b: &[Literal]) -> Option<u32> {
    let mut found = None;
    for &l in a {
        if b.contains(&!l) {
            if found.is_some_and(|v| v != l.var()) {
                return None;
            }
            found = Some(l.var());
        }
    }
    found
}

/// In-memory step log written by the search solver.
#[derive(Clone, Debug, Default)]
pub struct TraceRecorder {
    steps: Vec<TraceStep>,
    inputs: HashMap<u32, usize>,
}

impl TraceRecorder {
    pub fn new() -> TraceRecorder {
        TraceRecorder::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, kind: StepKind, antecedents: Vec<u32>, pivot: Option<u32>, lits: Vec<Literal>) -> u32 {
        let id = self.steps.len() as u32 + 1;
        self.steps.push(TraceStep { id, kind, antecedents, pivot, lits });
        id
    }

    pub fn push_input_clause(&mut self, index: usize, lits: Vec<Literal>) -> u32 {
        let id = self.push(StepKind::InputClause, Vec::new(), None, lits);
        self.inputs.insert(id, index);
        id
    }

    pub fn step(&self, id: u32) -> &TraceStep {
        &self.steps[id as usize - 1]
    }

    /// Extracts the cone of `root`, renumbered from 1 in derivation order.
    pub fn proof(&self, root: u32, kind: ProofKind, max_var: u32) -> Proof {
        let mut needed = vec![false; self.steps.len() + 1];
        needed[root as usize] = true;
        for i in (1..=root as usize).rev() {
            if needed[i] {
                for &a in &self.steps[i - 1].antecedents {
                    needed[a as usize] = true;
                }
            }
        }
        let mut renum = vec![0u32; self.steps.len() + 1];
        let mut steps = Vec::new();
        let mut input_map = BTreeMap::new();
        for i in 1..=root as usize {
            if !needed[i] {
                continue;
            }
            let s = &self.steps[i - 1];
            let id = steps.len() as u32 + 1;
            renum[i] = id;
            if let Some(&idx) = self.inputs.get(&s.id) {
                input_map.insert(id, idx);
            }
            steps.push(TraceStep {
                id,
                kind: s.kind,
                antecedents: s.antecedents.iter().map(|&a| renum[a as usize]).collect(),
                pivot: s.pivot,
                lits: s.lits.clone(),
            });
        }
        Proof { kind, max_var, root: renum[root as usize], steps, input_map }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(v: &[i32]) -> Vec<Literal> {
        v.iter().map(|&x| Literal::from_dimacs(x).unwrap()).collect()
    }

    #[test]
    fn cone_extraction_and_text_round_trip() {
        let mut t = TraceRecorder::new();
        let a = t.push_input_clause(0, lits(&[1]));
        let _unused = t.push_input_clause(2, lits(&[2]));
        let b = t.push_input_clause(1, lits(&[-1]));
        let r = t.push(StepKind::Resolution, vec![a, b], Some(1), vec![]);
        let p = t.proof(r, ProofKind::Refutation, 2);
        assert_eq!(p.steps.len(), 3);
        assert_eq!(p.root, 3);
        assert_eq!(p.input_map, BTreeMap::from([(1, 0), (2, 1)]));
        let text = p.to_text();
        assert_eq!(text, "p qrp 2 3 refutation\ni 1 0\ni 2 1\n1 1 0 0\n2 -1 0 0\n3 0 1 2 0\nr 3 refutation\n");
        let back = read_proof(text.as_bytes()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn malformed_lines_are_reported() {
        assert!(parse_trace_line("3 1 2 0", 4).is_err());
        assert!(parse_trace_line("x", 1).is_err());
        assert_eq!(parse_trace_line("c comment", 1), Ok(None));
    }
}
