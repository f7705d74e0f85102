use std::fmt::Write as _;

use thiserror::Error;

use super::{Clause, Literal, Pcnf, Prefix, Quantifier, QuantifierBlock};

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept clause-count mismatches and variables above the declared bound.
    pub lenient: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("missing or malformed problem line")]
    BadHeader,
    #[error("unexpected token {0:?}")]
    BadToken(String),
    #[error("quantifier line after the first clause")]
    LateQuantifier,
    #[error("variable {var} exceeds declared bound {bound}")]
    VarOutOfRange { var: u32, bound: u32 },
    #[error("variable {0} quantified twice")]
    DuplicateBinding(u32),
    #[error("quantifier line not terminated by 0")]
    UnterminatedQuantifier,
    #[error("last clause not terminated by 0")]
    UnterminatedClause,
    #[error("declared {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error("input is not valid UTF-8")]
    Encoding,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

pub fn parse_qdimacs(text: &[u8]) -> Result<Pcnf, ParseError> {
    parse_qdimacs_with(text, ParseOptions::default())
}

/// Parses QDIMACS. Variables that occur in clauses but in no quantifier line
/// are bound existentially at the outermost level, merged into a leading
/// existential block if there is one.
pub fn parse_qdimacs_with(text: &[u8], opts: ParseOptions) -> Result<Pcnf, ParseError> {
    let text = std::str::from_utf8(text).map_err(|_| err(0, ParseErrorKind::Encoding))?;
    let mut header: Option<(u32, usize)> = None;
    let mut blocks: Vec<QuantifierBlock> = Vec::new();
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut seen_clause = false;
    let mut last_line = 0;
    let mut bound_vars = std::collections::HashSet::new();

    let check_var = |var: u32, line: usize, bound: u32| -> Result<(), ParseError> {
        if var > bound && !opts.lenient {
            return Err(err(line, ParseErrorKind::VarOutOfRange { var, bound }));
        }
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let first = tokens.next().unwrap_or_default();
        let Some((bound, _)) = header else {
            if first != "p" || tokens.next() != Some("cnf") {
                return Err(err(line, ParseErrorKind::BadHeader));
            }
            let mut num = || tokens.next().and_then(|t| t.parse::<u64>().ok());
            let (Some(v), Some(c), None) = (num(), num(), tokens.next()) else {
                return Err(err(line, ParseErrorKind::BadHeader));
            };
            let v = u32::try_from(v).map_err(|_| err(line, ParseErrorKind::BadHeader))?;
            header = Some((v, c as usize));
            continue;
        };
        if first == "a" || first == "e" {
            if seen_clause || !current.is_empty() {
                return Err(err(line, ParseErrorKind::LateQuantifier));
            }
            let quantifier = if first == "a" { Quantifier::Forall } else { Quantifier::Exists };
            let mut vars = Vec::new();
            let mut terminated = false;
            for t in tokens {
                if terminated {
                    return Err(err(line, ParseErrorKind::BadToken(t.to_string())));
                }
                let v: u32 = t.parse().map_err(|_| err(line, ParseErrorKind::BadToken(t.to_string())))?;
                if v == 0 {
                    terminated = true;
                } else {
                    check_var(v, line, bound)?;
                    if !bound_vars.insert(v) {
                        return Err(err(line, ParseErrorKind::DuplicateBinding(v)));
                    }
                    vars.push(v);
                }
            }
            if !terminated {
                return Err(err(line, ParseErrorKind::UnterminatedQuantifier));
            }
            if !vars.is_empty() {
                blocks.push(QuantifierBlock::new(quantifier, vars));
            }
            continue;
        }
        for t in std::iter::once(first).chain(tokens) {
            let v: i32 = t.parse().map_err(|_| err(line, ParseErrorKind::BadToken(t.to_string())))?;
            if t.starts_with("-0") {
                return Err(err(line, ParseErrorKind::BadToken(t.to_string())));
            }
            match Literal::from_dimacs(v) {
                None if v == 0 => {
                    clauses.push(Clause::new(std::mem::take(&mut current)));
                    seen_clause = true;
                }
                None => return Err(err(line, ParseErrorKind::BadToken(t.to_string()))),
                Some(lit) => {
                    check_var(lit.var(), line, bound)?;
                    current.push(lit);
                }
            }
        }
    }

    let Some((bound, declared)) = header else {
        return Err(err(last_line.max(1), ParseErrorKind::BadHeader));
    };
    if !current.is_empty() {
        if !opts.lenient {
            return Err(err(last_line, ParseErrorKind::UnterminatedClause));
        }
        clauses.push(Clause::new(current));
    }
    if clauses.len() != declared && !opts.lenient {
        return Err(err(last_line, ParseErrorKind::ClauseCount { declared, found: clauses.len() }));
    }

    let mut max_var = blocks.iter().flat_map(|b| b.vars.iter().copied()).fold(bound, u32::max);
    let mut free: Vec<u32> = clauses
        .iter()
        .flat_map(|c| c.lits().iter().map(|l| l.var()))
        .filter(|v| !bound_vars.contains(v))
        .collect();
    free.sort_unstable();
    free.dedup();
    if let Some(&m) = free.last() {
        max_var = max_var.max(m);
    }
    if !free.is_empty() {
        match blocks.first_mut() {
            Some(b) if b.quantifier == Quantifier::Exists => {
                free.extend_from_slice(&b.vars);
                b.vars = free;
            }
            _ => blocks.insert(0, QuantifierBlock::new(Quantifier::Exists, free)),
        }
    }
    let f = Pcnf::new(Prefix::new(blocks), clauses).expect("binding checked above");
    Ok(f.with_max_var(max_var))
}

pub fn write_qdimacs(f: &Pcnf) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", f.max_var(), f.clauses().len());
    for b in f.prefix().blocks() {
        out.push(b.quantifier.letter());
        for v in &b.vars {
            let _ = write!(out, " {v}");
        }
        out.push_str(" 0\n");
    }
    for c in f.clauses() {
        for l in c.lits() {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(vars: &[u32]) -> QuantifierBlock {
        QuantifierBlock::new(Quantifier::Exists, vars.to_vec())
    }

    fn all(vars: &[u32]) -> QuantifierBlock {
        QuantifierBlock::new(Quantifier::Forall, vars.to_vec())
    }

    #[test]
    fn parses_basic_prefix_and_matrix() {
        let f = parse_qdimacs(b"p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n").unwrap();
        assert_eq!(f.prefix().blocks(), &[all(&[1]), ex(&[2])]);
        assert_eq!(f.clauses(), &[Clause::from_dimacs(&[1, 2]), Clause::from_dimacs(&[-1, -2])]);
    }

    #[test]
    fn empty_formula() {
        let f = parse_qdimacs(b"p cnf 0 0\n").unwrap();
        assert!(f.prefix().is_empty());
        assert!(f.clauses().is_empty());
        assert_eq!(write_qdimacs(&f), "p cnf 0 0\n");
    }

    #[test]
    fn free_variables_join_leading_existential_block() {
        let f = parse_qdimacs(b"p cnf 2 1\ne 2 0\n1 2 0\n").unwrap();
        assert_eq!(f.prefix().blocks(), &[ex(&[1, 2])]);
        let g = parse_qdimacs(b"p cnf 3 1\na 2 0\n1 2 3 0\n").unwrap();
        assert_eq!(g.prefix().blocks(), &[ex(&[1, 3]), all(&[2])]);
        let back = parse_qdimacs(write_qdimacs(&g).as_bytes()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_qdimacs(b"c hi\np cnf 2 1\ne 1 0\n1 x 0\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(matches!(e.kind, ParseErrorKind::BadToken(_)));

        let e = parse_qdimacs(b"p cnf 2 1\n1 3 0\n").unwrap_err();
        assert_eq!(e, err(2, ParseErrorKind::VarOutOfRange { var: 3, bound: 2 }));

        let e = parse_qdimacs(b"p cnf 2 1\n1 0\ne 2 0\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::LateQuantifier);

        assert_eq!(parse_qdimacs(b"1 2 0\n").unwrap_err().kind, ParseErrorKind::BadHeader);
        assert!(matches!(parse_qdimacs(b"p cnf 2 2\n1 0\n").unwrap_err().kind, ParseErrorKind::ClauseCount { .. }));
    }

    #[test]
    fn leniency_accepts_bound_and_count_violations() {
        let opts = ParseOptions { lenient: true };
        let f = parse_qdimacs_with(b"p cnf 1 3\n1 5 0\n", opts).unwrap();
        assert_eq!(f.max_var(), 5);
        assert_eq!(f.clauses().len(), 1);
    }

    #[test]
    fn clauses_may_span_lines() {
        let f = parse_qdimacs(b"p cnf 3 2\n1 2\n3 0 -1 0\n").unwrap();
        assert_eq!(f.clauses().len(), 2);
        assert_eq!(f.clauses()[0].len(), 3);
    }
}
