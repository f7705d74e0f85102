use std::fmt;

use md5::Md5;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Clause, Pcnf};

/// Sorts and deduplicates literals, drops tautologies, then sorts and
/// deduplicates clauses. The prefix and the variable bound are untouched.
pub fn normalize(f: &Pcnf) -> Pcnf {
    let mut clauses: Vec<Clause> = f.clauses().iter().map(Clause::sorted).filter(|c| !c.is_tautology()).collect();
    clauses.sort_unstable();
    clauses.dedup();
    Pcnf::from_parts(f.prefix().clone(), clauses, f.max_var())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DigestAlgorithm {
    #[default]
    Md5,
    Sha256,
}

impl DigestAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            DigestAlgorithm::Md5 => "md5",
            DigestAlgorithm::Sha256 => "sha256",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalDigest {
    pub algorithm: DigestAlgorithm,
    pub bytes: Vec<u8>,
}

impl CanonicalDigest {
    pub fn hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parses the `algo:hex` form produced by `Display`.
    pub fn parse(s: &str) -> Option<CanonicalDigest> {
        let (algo, hex) = s.split_once(':')?;
        let algorithm = match algo {
            "md5" => DigestAlgorithm::Md5,
            "sha256" => DigestAlgorithm::Sha256,
            _ => return None,
        };
        if hex.len() % 2 != 0 {
            return None;
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(hex.get(i..i + 2)?, 16).ok())
            .collect::<Option<Vec<u8>>>()?;
        Some(CanonicalDigest { algorithm, bytes })
    }
}

impl fmt::Display for CanonicalDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.algorithm.name(), self.hex())
    }
}

/// Byte string hashed by [`canonical_digest`].
///
/// Blocks are merged and their variables sorted, rendered as `e1,2` or `a3`
/// and joined by `|`; then `||`; then one line per normalized clause with
/// comma-separated literals, lines in bytewise order, each ending in LF.
pub fn canonical_text(f: &Pcnf) -> String {
    let n = normalize(f);
    let prefix: Vec<String> = n
        .prefix()
        .canonical()
        .blocks()
        .iter()
        .map(|b| {
            let vars: Vec<String> = b.vars.iter().map(u32::to_string).collect();
            format!("{}{}", b.quantifier.letter(), vars.join(","))
        })
        .collect();
    let mut lines: Vec<String> = n
        .clauses()
        .iter()
        .map(|c| c.lits().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    lines.sort_unstable();
    let mut out = prefix.join("|");
    out.push_str("||");
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

pub fn canonical_digest(f: &Pcnf) -> CanonicalDigest {
    canonical_digest_with(f, DigestAlgorithm::Md5)
}

pub fn canonical_digest_with(f: &Pcnf, algorithm: DigestAlgorithm) -> CanonicalDigest {
    let text = canonical_text(f);
    let bytes = match algorithm {
        DigestAlgorithm::Md5 => Md5::digest(text.as_bytes()).to_vec(),
        DigestAlgorithm::Sha256 => Sha256::digest(text.as_bytes()).to_vec(),
    };
    CanonicalDigest { algorithm, bytes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_qdimacs;

    fn f(text: &str) -> Pcnf {
        parse_qdimacs(text.as_bytes()).unwrap()
    }

    #[test]
    fn normalize_drops_tautologies_and_sorts() {
        let g = normalize(&f("p cnf 2 2\ne 1 2 0\n2 -1 0\n1 -1 0\n"));
        assert_eq!(g.clauses(), &[Clause::from_dimacs(&[-1, 2])]);
        let h = normalize(&f("p cnf 2 2\ne 1 2 0\n1 2 0\n2 1 1 0\n"));
        assert_eq!(h.clauses(), &[Clause::from_dimacs(&[1, 2])]);
    }

    #[test]
    fn canonical_text_layout() {
        let g = f("p cnf 4 3\ne 2 0\ne 1 0\na 4 3 0\n-1 4 0\n2 1 0\n3 -2 0\n");
        assert_eq!(canonical_text(&g), "e1,2|a3,4||-1,4\n-2,3\n1,2\n");
        assert_eq!(canonical_text(&Pcnf::default()), "||");
    }

    #[test]
    fn digest_is_permutation_and_tautology_invariant() {
        let a = f("p cnf 3 2\na 1 0\ne 2 3 0\n1 2 0\n-2 3 0\n");
        let b = f("p cnf 3 3\na 1 0\ne 2 3 0\n3 -2 0\n1 -1 2 0\n2 1 0\n");
        assert_eq!(canonical_digest(&a), canonical_digest(&b));
        let c = f("p cnf 3 2\na 1 0\ne 2 3 0\n-1 2 0\n-2 3 0\n");
        assert_ne!(canonical_digest(&a), canonical_digest(&c));
        assert_eq!(canonical_digest(&a).bytes.len(), 16);
        assert_eq!(canonical_digest_with(&a, DigestAlgorithm::Sha256).bytes.len(), 32);
    }

    #[test]
    fn md5_matches_reference_values() {
        assert_eq!(canonical_digest(&Pcnf::default()).hex(), "7d010443693eec253a121e2aa2ba177c");
        let g = f("p cnf 4 3\ne 2 0\ne 1 0\na 4 3 0\n-1 4 0\n2 1 0\n3 -2 0\n");
        assert_eq!(canonical_digest(&g).hex(), "5f726f4b1584fadd47457440b4efff06");
        let d = canonical_digest(&g);
        assert_eq!(CanonicalDigest::parse(&d.to_string()), Some(d));
    }
}
