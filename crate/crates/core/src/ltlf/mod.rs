//! LTLf syntax, parsing and direct finite-trace semantics.

mod formula;
mod parser;
mod random;
mod trace;

pub use formula::{Atom, Formula, NO_MATCH};
pub use parser::parse_formula;
pub use random::{random_formula, random_formula_with};
pub use trace::{eval_trace, satisfies, Trace};
