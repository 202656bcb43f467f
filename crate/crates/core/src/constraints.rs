//! Constraint patterns for keyword-style generation and the bundled outfit
//! rule suite.

use crate::error::FormulaError;
use crate::ltlf::{parse_formula, Atom, Formula, NO_MATCH};

pub const EOS: &str = "eos";
pub const DOT: &str = "dot";

/// Fashion-MNIST class names in class-id order.
pub const FASHION_LABELS: [&str; 10] = [
    "t_shirt_top",
    "trouser",
    "pullover",
    "dress",
    "coat",
    "sandal",
    "shirt",
    "sneaker",
    "bag",
    "ankle_boot",
];

const FASHION_SUITE: &str = include_str!("../fixtures/ordered_fashion_mnist.ltlf");

fn names(concepts: &[impl AsRef<str>]) -> Result<Vec<&str>, FormulaError> {
    if concepts.is_empty() {
        return Err(FormulaError::EmptyConcepts);
    }
    concepts
        .iter()
        .map(|c| {
            let c = c.as_ref();
            if c == NO_MATCH || c == EOS || c == DOT {
                Err(FormulaError::InvalidAtom(c.to_string()))
            } else {
                Atom::new(c).map(|_| c)
            }
        })
        .collect()
}

/// Conjuncts of the unordered pattern: `((!eos U c) & F(c))` per concept,
/// then `F(eos)`.
pub fn unordered_parts(concepts: &[impl AsRef<str>]) -> Result<Vec<String>, FormulaError> {
    let mut parts: Vec<String> = names(concepts)?
        .into_iter()
        .map(|c| format!("((!{EOS} U {c}) & F({c}))"))
        .collect();
    parts.push(format!("F({EOS})"));
    Ok(parts)
}

/// Conjuncts of the ordered pattern: each word precedes the next with no
/// sentence end in between, the last word precedes `eos`, a `dot` is
/// followed by `eos`, and nothing outside the words, `dot`, `eos` and
/// `noMatch` occurs.
pub fn ordered_parts(words: &[impl AsRef<str>]) -> Result<Vec<String>, FormulaError> {
    let words = names(words)?;
    let mut parts = Vec::with_capacity(words.len() + 2);
    for (i, w) in words.iter().enumerate() {
        let next = words.get(i + 1).copied().unwrap_or(EOS);
        parts.push(format!("((!({next} | {DOT}) U {w}) & F({next}))"));
    }
    parts.push(format!("G({DOT} -> X({EOS}))"));
    parts.push(format!(
        "G({} | {DOT} | {EOS} | {NO_MATCH})",
        words.join(" | ")
    ));
    Ok(parts)
}

pub fn unordered_text(concepts: &[impl AsRef<str>]) -> Result<String, FormulaError> {
    Ok(unordered_parts(concepts)?.join(" & "))
}

pub fn ordered_text(words: &[impl AsRef<str>]) -> Result<String, FormulaError> {
    Ok(ordered_parts(words)?.join(" & "))
}

pub fn unordered(concepts: &[impl AsRef<str>]) -> Result<Formula, FormulaError> {
    parse_formula(&unordered_text(concepts)?, &pattern_alphabet(concepts)?)
}

pub fn ordered(words: &[impl AsRef<str>]) -> Result<Formula, FormulaError> {
    parse_formula(&ordered_text(words)?, &pattern_alphabet(words)?)
}

/// Reserved atoms plus the given concepts, as accepted by the generators.
pub fn pattern_alphabet(concepts: &[impl AsRef<str>]) -> Result<Vec<Atom>, FormulaError> {
    let mut out: Vec<Atom> = concepts
        .iter()
        .map(|c| Atom::new(c.as_ref()))
        .collect::<Result<_, _>>()?;
    for r in [DOT, EOS, NO_MATCH] {
        let a = Atom::new(r)?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

/// Parses one formula per line; blank lines and `#` comments are skipped.
pub fn parse_suite(text: &str, alphabet: &[Atom]) -> Result<Vec<Formula>, FormulaError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_formula(l, alphabet))
        .collect()
}

pub fn fashion_alphabet() -> Vec<Atom> {
    FASHION_LABELS
        .iter()
        .map(|l| Atom::new(*l).expect("labels are atoms"))
        .chain([Atom::no_match()])
        .collect()
}

/// The thirteen outfit rules, in order.
pub fn fashion_suite() -> Vec<Formula> {
    parse_suite(FASHION_SUITE, &fashion_alphabet()).expect("bundled suite parses")
}
