//! Certificate extraction from checked proofs.
//!
//! Every reduction step that drops a literal `l` of a defined variable `v`
//! contributes a rule: when the reduced clause is falsified (or the reduced
//! cube satisfied), `v` takes the value that makes `l` false (true). A
//! variable's function is the chain of its rules in proof order, earliest
//! first, defaulting to false when none applies.
//!
//! Given any assignment that follows these functions, take the earliest proof
//! step that is falsified (satisfied). It cannot be a resolution, since one of
//! its antecedents would be falsified too; if it were a reduction, its rule
//! would fire and no earlier rule can, so the dropped literal is false (true)
//! as well. Hence it is an input clause (cube), and the functions are a
//! countermodel (model).

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::check::{check_proof, CheckReport};
use super::{Aig, Certificate, CertificateKind, NodeId};
use crate::formula::{canonical_digest, Literal, Pcnf};
use crate::solver::{Proof, ProofKind, StepKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("proof was rejected by the checker: {0:?}")]
    Unchecked(Box<CheckReport>),
    #[error("reduction at step {step} keeps variable {kept}, which lies inside the dropped variable {dropped}")]
    PartialReduction { step: u32, dropped: u32, kept: u32 },
}

struct Rule {
    condition: Vec<Literal>,
    value: bool,
}

pub fn extract_certificate(p: &Proof, f: &Pcnf) -> Result<Certificate, ExtractError> {
    let report = check_proof(p, f);
    if !report.accepted {
        return Err(ExtractError::Unchecked(Box::new(report)));
    }
    let scope = f.scope();
    let kind = match p.kind {
        ProofKind::Refutation => CertificateKind::Herbrand,
        ProofKind::Satisfaction => CertificateKind::Skolem,
    };
    let defined = |v: u32| scope.is_universal(v) == kind.defines_universals();
    let lits_of: HashMap<u32, &Vec<Literal>> = p.steps.iter().map(|s| (s.id, &s.lits)).collect();
    let mut rules: BTreeMap<u32, Vec<Rule>> = BTreeMap::new();
    for s in &p.steps {
        if !matches!(s.kind, StepKind::UniversalReduction | StepKind::ExistentialReduction) {
            continue;
        }
        let parent = lits_of[&s.antecedents[0]];
        for &l in parent.iter().filter(|l| !s.lits.contains(l)) {
            if let Some(k) = s.lits.iter().find(|k| defined(k.var()) && scope.level(k.var()) >= scope.level(l.var())) {
                return Err(ExtractError::PartialReduction { step: s.id, dropped: l.var(), kept: k.var() });
            }
            let value = match kind {
                CertificateKind::Herbrand => !l.is_positive(),
                CertificateKind::Skolem => l.is_positive(),
            };
            rules.entry(l.var()).or_default().push(Rule { condition: s.lits.clone(), value });
        }
    }

    let mut graph = Aig::new();
    let mut functions: BTreeMap<u32, NodeId> = BTreeMap::new();
    let mut order: Vec<u32> = f.prefix().vars().filter(|&v| defined(v)).collect();
    order.sort_by_key(|&v| (scope.level(v), v));
    for v in order {
        let mut node = graph.constant(false);
        for r in rules.get(&v).map(Vec::as_slice).unwrap_or_default().iter().rev() {
            let parts: Vec<NodeId> = r
                .condition
                .iter()
                .map(|&l| {
                    let base = if defined(l.var()) { functions[&l.var()] } else { graph.input(l.var()) };
                    // a clause condition asks for the literal to be false
                    if l.is_positive() == (kind == CertificateKind::Skolem) {
                        base
                    } else {
                        graph.not(base)
                    }
                })
                .collect();
            let cond = graph.and_all(parts);
            let value = graph.constant(r.value);
            node = graph.ite(cond, value, node);
        }
        functions.insert(v, node);
    }
    Ok(Certificate { kind, digest: canonical_digest(f), graph, functions })
}
