//! Proof checking, certificate extraction and certificate validation.
//!
//! Certificate file format:
//!
//! ```text
//! qcert skolem|herbrand <algorithm>:<hex digest of the formula>
//! n <id> false | n <id> input <var> | n <id> not <id> | n <id> and <id> <id>
//! f <var> <node id>
//! ```

mod aig;
mod check;
mod extract;
mod validate;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::formula::{CanonicalDigest, Pcnf};

pub use aig::{Aig, Node, NodeId};
pub use check::{check_proof, check_refutation, check_satisfaction, check_trace_file, CheckOptions, CheckReport, RejectReason};
pub use extract::{extract_certificate, ExtractError};
pub use validate::{validate_certificate, ValidateBudget, ValidateError, Validation, ValidationMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    /// Functions for existentials over universals to their left.
    Skolem,
    /// Functions for universals over existentials to their left.
    Herbrand,
}

impl CertificateKind {
    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::Skolem => "skolem",
            CertificateKind::Herbrand => "herbrand",
        }
    }

    fn defines_universals(self) -> bool {
        self == CertificateKind::Herbrand
    }
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub digest: CanonicalDigest,
    pub graph: Aig,
    pub functions: BTreeMap<u32, NodeId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertificateError {
    #[error("certificate line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no function for variable {0}")]
    Missing(u32),
    #[error("function for variable {var} depends on variable {on}, which is not to its left with the opposite quantifier")]
    Dependency { var: u32, on: u32 },
    #[error("variable {0} has a function but is quantified the wrong way for this certificate")]
    WrongQuantifier(u32),
}

impl Certificate {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qcert {} {}", self.kind, self.digest);
        for (i, n) in self.graph.nodes().iter().enumerate() {
            let _ = match *n {
                Node::False => writeln!(out, "n {i} false"),
                Node::Input(v) => writeln!(out, "n {i} input {v}"),
                Node::Not(a) => writeln!(out, "n {i} not {a}"),
                Node::And(a, b) => writeln!(out, "n {i} and {a} {b}"),
            };
        }
        for (v, r) in &self.functions {
            let _ = writeln!(out, "f {v} {r}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Certificate, CertificateError> {
        let mut head = None;
        let mut nodes = Vec::new();
        let mut functions = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |m: &str| CertificateError::Parse { line: i + 1, message: m.to_string() };
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| tok.get(k).and_then(|s| s.parse::<u32>().ok()).ok_or_else(|| bad("expected a number"));
            match tok.first().copied() {
                None => continue,
                Some("qcert") => {
                    let kind = match tok.get(1).copied() {
                        Some("skolem") => CertificateKind::Skolem,
                        Some("herbrand") => CertificateKind::Herbrand,
                        _ => return Err(bad("unknown certificate kind")),
                    };
                    let digest = tok.get(2).and_then(|s| CanonicalDigest::parse(s)).ok_or_else(|| bad("bad digest"))?;
                    head = Some((kind, digest));
                }
                Some("n") => {
                    if num(1)? as usize != nodes.len() {
                        return Err(bad("node ids must be consecutive from 0"));
                    }
                    nodes.push(match tok.get(2).copied() {
                        Some("false") => Node::False,
                        Some("input") => Node::Input(num(3)?),
                        Some("not") => Node::Not(num(3)?),
                        Some("and") => Node::And(num(3)?, num(4)?),
                        _ => return Err(bad("unknown node op")),
                    });
                }
                Some("f") => {
                    let (v, r) = (num(1)?, num(2)?);
                    if r as usize >= nodes.len() {
                        return Err(bad("function root is not a node"));
                    }
                    functions.insert(v, r);
                }
                Some(_) => return Err(bad("unknown line")),
            }
        }
        let (kind, digest) = head.ok_or(CertificateError::Parse { line: 0, message: "missing qcert header".into() })?;
        let graph = Aig::from_nodes(nodes).map_err(|m| CertificateError::Parse { line: 0, message: m })?;
        Ok(Certificate { kind, digest, graph, functions })
    }

    /// Every defined variable has a function whose support consists of
    /// oppositely quantified variables bound strictly to its left.
    pub fn check_dependencies(&self, f: &Pcnf) -> Result<(), CertificateError> {
        let scope = f.scope();
        for v in f.prefix().vars() {
            if scope.is_universal(v) == self.kind.defines_universals() && !self.functions.contains_key(&v) {
                return Err(CertificateError::Missing(v));
            }
        }
        for (&v, &root) in &self.functions {
            if scope.level(v) == 0 || scope.is_universal(v) != self.kind.defines_universals() {
                return Err(CertificateError::WrongQuantifier(v));
            }
            for on in self.graph.support(root) {
                let ok = scope.level(on) > 0
                    && scope.is_universal(on) != self.kind.defines_universals()
                    && scope.level(on) < scope.level(v);
                if !ok {
                    return Err(CertificateError::Dependency { var: v, on });
                }
            }
        }
        Ok(())
    }
}
