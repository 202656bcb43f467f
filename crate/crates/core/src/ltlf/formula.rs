use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::FormulaError;

/// Name of the reserved proposition consumed when an output span matches no concept.
pub const NO_MATCH: &str = "noMatch";

/// An atomic proposition.
///
/// Names are lowercase ASCII alphanumerics plus `_`. The reserved name
/// [`NO_MATCH`] is also accepted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Atom(String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Result<Self, FormulaError> {
        let name = name.into();
        if Self::is_valid_name(&name) {
            Ok(Atom(name))
        } else {
            Err(FormulaError::InvalidAtom(name))
        }
    }

    pub fn no_match() -> Self {
        Atom(NO_MATCH.to_string())
    }

    pub fn is_valid_name(name: &str) -> bool {
        name == NO_MATCH
            || (!name.is_empty()
                && name
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Atom {
    type Error = FormulaError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Atom::new(value)
    }
}

impl From<Atom> for String {
    fn from(atom: Atom) -> Self {
        atom.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// LTLf formula.
///
/// `Or`, `Release`, `Eventually`, `Always` and `WeakNext` are sugar over the
/// core grammar `{True, Atom, Not, And, Next, Until}`; see [`Formula::desugar`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    WeakNext(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

impl Formula {
    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Formula) -> Self {
        self.not().or(rhs)
    }

    pub fn next(self) -> Self {
        Formula::Next(Box::new(self))
    }

    pub fn weak_next(self) -> Self {
        Formula::WeakNext(Box::new(self))
    }

    pub fn until(self, rhs: Formula) -> Self {
        Formula::Until(Box::new(self), Box::new(rhs))
    }

    pub fn release(self, rhs: Formula) -> Self {
        Formula::Release(Box::new(self), Box::new(rhs))
    }

    pub fn eventually(self) -> Self {
        Formula::Eventually(Box::new(self))
    }

    pub fn always(self) -> Self {
        Formula::Always(Box::new(self))
    }

    /// Left-nested conjunction; `True` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Left-nested disjunction; `!true` for an empty iterator.
    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(|| Formula::True.not())
    }

    /// Rewrites into the core grammar. Double negations are left in place.
    pub fn desugar(&self) -> Formula {
        use Formula::*;
        match self {
            True => True,
            Atom(a) => Atom(a.clone()),
            Not(f) => f.desugar().not(),
            And(a, b) => a.desugar().and(b.desugar()),
            Or(a, b) => a.desugar().not().and(b.desugar().not()).not(),
            Next(f) => f.desugar().next(),
            WeakNext(f) => f.desugar().not().next().not(),
            Until(a, b) => a.desugar().until(b.desugar()),
            Release(a, b) => a.desugar().not().until(b.desugar().not()).not(),
            Eventually(f) => True.until(f.desugar()),
            Always(f) => True.until(f.desugar().not()).not(),
        }
    }

    pub fn is_core(&self) -> bool {
        use Formula::*;
        match self {
            True | Atom(_) => true,
            Not(f) | Next(f) => f.is_core(),
            And(a, b) | Until(a, b) => a.is_core() && b.is_core(),
            Or(..) | WeakNext(_) | Release(..) | Eventually(_) | Always(_) => false,
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        use Formula::*;
        match self {
            True => {}
            Atom(a) => {
                out.insert(a.clone());
            }
            Not(f) | Next(f) | WeakNext(f) | Eventually(f) | Always(f) => f.collect_atoms(out),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Maximum number of nested operators (leaves have depth 0).
    pub fn depth(&self) -> usize {
        use Formula::*;
        match self {
            True | Atom(_) => 0,
            Not(f) | Next(f) | WeakNext(f) | Eventually(f) | Always(f) => 1 + f.depth(),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn size(&self) -> usize {
        use Formula::*;
        match self {
            True | Atom(_) => 1,
            Not(f) | Next(f) | WeakNext(f) | Eventually(f) | Always(f) => 1 + f.size(),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => 1 + a.size() + b.size(),
        }
    }

    // Binding strength used by the printer; mirrors the parser's precedence.
    fn precedence(&self) -> u8 {
        use Formula::*;
        match self {
            Or(..) => 1,
            And(..) => 2,
            Until(..) | Release(..) => 3,
            Not(_) | Next(_) | WeakNext(_) | Eventually(_) | Always(_) => 4,
            True | Atom(_) => 5,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;

        // `&` and `|` associate to the left; `U` and `R` are always
        // parenthesized when nested.
        let operand = |f: &mut fmt::Formatter<'_>, child: &Formula, min: u8| {
            if child.precedence() >= min {
                write!(f, "{child}")
            } else {
                write!(f, "({child})")
            }
        };
        match self {
            True => f.write_str("true"),
            Atom(a) => write!(f, "{a}"),
            Not(c) => {
                f.write_str("!")?;
                operand(f, c, 4)
            }
            Next(c) => write!(f, "X({c})"),
            WeakNext(c) => write!(f, "WX({c})"),
            Eventually(c) => write!(f, "F({c})"),
            Always(c) => write!(f, "G({c})"),
            And(a, b) => {
                operand(f, a, 2)?;
                f.write_str(" & ")?;
                operand(f, b, 3)
            }
            Or(a, b) => {
                operand(f, a, 1)?;
                f.write_str(" | ")?;
                operand(f, b, 2)
            }
            Until(a, b) => {
                operand(f, a, 4)?;
                f.write_str(" U ")?;
                operand(f, b, 4)
            }
            Release(a, b) => {
                operand(f, a, 4)?;
                f.write_str(" R ")?;
                operand(f, b, 4)
            }
        }
    }
}
