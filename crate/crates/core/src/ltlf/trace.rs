use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::formula::{Atom, Formula};
use crate::error::FormulaError;

/// Finite word over sets of atoms. Each symbol is kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Vec<Atom>>", into = "Vec<Vec<Atom>>")]
pub struct Trace {
    symbols: Vec<Vec<Atom>>,
}

impl Trace {
    pub fn new(symbols: impl IntoIterator<Item = impl IntoIterator<Item = Atom>>) -> Self {
        let symbols = symbols
            .into_iter()
            .map(|set| {
                set.into_iter()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            })
            .collect();
        Trace { symbols }
    }

    /// One atom per instant, the shape produced by concept-level decoding.
    pub fn one_hot(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Trace::new(atoms.into_iter().map(|a| [a]))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, t: usize) -> &[Atom] {
        &self.symbols[t]
    }

    pub fn symbols(&self) -> &[Vec<Atom>] {
        &self.symbols
    }

    fn holds(&self, t: usize, atom: &Atom) -> bool {
        self.symbols[t].binary_search(atom).is_ok()
    }

    /// Parses one line of the trace file format: a JSON array of string arrays,
    /// with every atom drawn from `alphabet`.
    pub fn from_json_line(line: &str, alphabet: &[Atom]) -> Result<Self, FormulaError> {
        let raw: Vec<Vec<String>> =
            serde_json::from_str(line).map_err(|e| FormulaError::Trace(e.to_string()))?;
        let mut symbols = Vec::with_capacity(raw.len());
        for set in raw {
            let mut atoms = Vec::with_capacity(set.len());
            for name in set {
                let atom = Atom::new(name)?;
                if !alphabet.contains(&atom) {
                    return Err(FormulaError::UndeclaredAtom(atom.into()));
                }
                atoms.push(atom);
            }
            symbols.push(atoms);
        }
        Ok(Trace::new(symbols))
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.symbols).expect("atoms serialize as strings")
    }
}

impl From<Vec<Vec<Atom>>> for Trace {
    fn from(symbols: Vec<Vec<Atom>>) -> Self {
        Trace::new(symbols)
    }
}

impl From<Trace> for Vec<Vec<Atom>> {
    fn from(trace: Trace) -> Self {
        trace.symbols
    }
}

/// Truth of `w, t ⊨ φ` under finite-trace semantics.
///
/// `X φ` requires a successor instant, `φ U ψ` quantifies over `t ≤ j < |w|`.
/// Every formula is false on the empty trace and at instants outside the trace.
pub fn eval_trace(formula: &Formula, trace: &Trace, t: usize) -> bool {
    if t >= trace.len() {
        return false;
    }
    eval_at(formula, trace, t)
}

/// `w ⊨ φ`, i.e. evaluation at instant 0.
pub fn satisfies(trace: &Trace, formula: &Formula) -> bool {
    eval_trace(formula, trace, 0)
}

fn eval_at(formula: &Formula, w: &Trace, t: usize) -> bool {
    use Formula::*;
    let last = w.len() - 1;
    match formula {
        True => true,
        Atom(a) => w.holds(t, a),
        Not(f) => !eval_at(f, w, t),
        And(a, b) => eval_at(a, w, t) && eval_at(b, w, t),
        Or(a, b) => eval_at(a, w, t) || eval_at(b, w, t),
        Next(f) => t < last && eval_at(f, w, t + 1),
        WeakNext(f) => t == last || eval_at(f, w, t + 1),
        Until(a, b) => {
            for j in t..=last {
                if eval_at(b, w, j) {
                    return true;
                }
                if !eval_at(a, w, j) {
                    return false;
                }
            }
            false
        }
        Release(a, b) => {
            for j in t..=last {
                if !eval_at(b, w, j) {
                    return false;
                }
                if eval_at(a, w, j) {
                    return true;
                }
            }
            true
        }
        Eventually(f) => (t..=last).any(|j| eval_at(f, w, j)),
        Always(f) => (t..=last).all(|j| eval_at(f, w, j)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltlf::parse_formula;

    fn atoms(names: &[&str]) -> Vec<Atom> {
        names.iter().map(|n| Atom::new(*n).unwrap()).collect()
    }

    fn trace(steps: &[&[&str]]) -> Trace {
        Trace::new(steps.iter().map(|s| atoms(s)))
    }

    #[test]
    fn eventually_cases() {
        let f = parse_formula("F(a)", &atoms(&["a"])).unwrap();
        assert!(eval_trace(&f, &trace(&[&["a"]]), 0));
        assert!(!eval_trace(&f, &trace(&[&[], &[]]), 0));
    }

    // Hand expansion of the cat/politician formula:
    //  [cat, noMatch, politician, eos]: ¬eos holds until cat at 0 and until
    //  politician at 2; F(cat), F(politician), F(eos) all hold.
    //  [cat, eos]: politician never occurs, so F(politician) fails.
    #[test]
    fn cat_politician_example() {
        let ab = atoms(&["cat", "politician", "eos", "noMatch"]);
        let f = parse_formula(
            "((!eos U cat) & F(cat)) & ((!eos U politician) & F(politician)) & F(eos)",
            &ab,
        )
        .unwrap();
        let good = trace(&[&["cat"], &["noMatch"], &["politician"], &["eos"]]);
        let bad = trace(&[&["cat"], &["eos"]]);
        assert!(satisfies(&good, &f));
        assert!(!satisfies(&bad, &f));
    }

    #[test]
    fn boundary_of_next() {
        let ab = atoms(&["a"]);
        let x = parse_formula("X(true)", &ab).unwrap();
        let wx = parse_formula("WX(!true)", &ab).unwrap();
        let w = trace(&[&["a"], &[]]);
        assert!(eval_trace(&x, &w, 0));
        assert!(!eval_trace(&x, &w, 1));
        assert!(!eval_trace(&wx, &w, 0));
        assert!(eval_trace(&wx, &w, 1));
    }

    #[test]
    fn empty_trace_satisfies_nothing() {
        let ab = atoms(&["a"]);
        for text in ["true", "!a", "G(a)", "WX(a)"] {
            let f = parse_formula(text, &ab).unwrap();
            assert!(!satisfies(&Trace::default(), &f), "{text}");
        }
    }

    #[test]
    fn json_lines() {
        let ab = atoms(&["cat", "eos", "noMatch"]);
        let t = Trace::from_json_line(r#"[["cat"],["noMatch"],["eos","cat","eos"]]"#, &ab).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.symbol(2), &atoms(&["cat", "eos"])[..]);
        assert_eq!(t.to_json_line(), r#"[["cat"],["noMatch"],["cat","eos"]]"#);
        assert!(Trace::from_json_line(r#"[["dog"]]"#, &ab).is_err());
        assert!(Trace::from_json_line(r#"[["cat"]"#, &ab).is_err());
    }
}
