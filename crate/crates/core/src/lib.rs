//! Temporal-logic constrained decoding.
//!
//! LTLf formulas are compiled into distance-annotated DFAs over a one-hot
//! concept alphabet ([`dfa`]), model outputs are mapped onto concepts
//! ([`concept`]), and a DFA-guided beam search ([`decoder`]) drives any
//! autoregressive [`scorer`] toward sequences that satisfy the formula.

pub mod concept;
pub mod constraints;
pub mod decoder;
pub mod dfa;
pub mod error;
pub mod ltlf;
pub mod oracle;
pub mod scorer;
