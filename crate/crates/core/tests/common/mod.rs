#![allow(dead_code)]

use std::collections::HashMap;

use tempo_core::concept::{ConceptTable, OutputId};
use tempo_core::dfa::{compile, Dfa, StateId};
use tempo_core::ltlf::{parse_formula, random_formula, Atom, Formula, NO_MATCH};
use tempo_core::scorer::MarkovTableScorer;

pub const EXAMPLE1: &str =
    "((!eos U cat) & F(cat)) & ((!eos U politician) & F(politician)) & F(eos)";

// word-piece vocabulary of the running example
pub const CAT: OutputId = 0;
pub const POLIT: OutputId = 1;
pub const ICI: OutputId = 2;
pub const AN: OutputId = 3;
pub const EOS: OutputId = 4;
pub const DOG: OutputId = 5;

pub fn atoms(names: &[&str]) -> Vec<Atom> {
    names.iter().map(|n| Atom::new(*n).unwrap()).collect()
}

pub fn example_formula() -> Formula {
    parse_formula(EXAMPLE1, &atoms(&["cat", "politician", "eos", NO_MATCH])).unwrap()
}

pub fn example_costs() -> HashMap<String, u32> {
    [("cat", 1), ("politician", 3), ("eos", 1), (NO_MATCH, 1)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

pub fn example_dfa() -> Dfa {
    compile(
        &example_formula(),
        &["cat", "politician", "eos"],
        &example_costs(),
    )
    .unwrap()
}

// rows s1..s6, columns cat, politician, eos (0-based state names)
pub const KEYWORD_MATRIX: [[usize; 3]; 6] = [
    [2, 1, 3],
    [4, 1, 3],
    [2, 4, 3],
    [3, 3, 3],
    [4, 4, 5],
    [5, 5, 5],
];
pub const KEYWORD_DISTANCES: [Option<u32>; 6] = [Some(5), Some(2), Some(4), None, Some(1), Some(0)];

/// Reference state index -> compiled state, when the automaton restricted to
/// `cat politician eos` is isomorphic to `KEYWORD_MATRIX`.
pub fn keyword_isomorphism(dfa: &Dfa) -> Option<Vec<StateId>> {
    if dfa.num_states() != 6 {
        return None;
    }
    let symbols: Vec<u32> = ["cat", "politician", "eos"]
        .iter()
        .map(|s| dfa.symbol_index(s))
        .collect::<Option<_>>()?;
    let mut map = [None; 6];
    map[0] = Some(dfa.initial());
    let mut queue = vec![0usize];
    while let Some(p) = queue.pop() {
        let q = map[p]?;
        for (col, &s) in symbols.iter().enumerate() {
            let p2 = KEYWORD_MATRIX[p][col];
            let q2 = dfa.step(q, s);
            match map[p2] {
                None => {
                    map[p2] = Some(q2);
                    queue.push(p2);
                }
                Some(existing) if existing != q2 => return None,
                Some(_) => {}
            }
        }
    }
    let map: Vec<StateId> = map.into_iter().collect::<Option<_>>()?;
    let mut sorted = map.clone();
    sorted.sort_unstable();
    sorted.dedup();
    (sorted.len() == 6).then_some(map)
}

/// `▁cat ▁polit ici an ▁eos ▁dog`, without `▁dog` when `with_dog` is false.
pub fn word_table(with_dog: bool) -> ConceptTable {
    ConceptTable::new(
        [
            ("cat".to_string(), vec![CAT]),
            ("politician".to_string(), vec![POLIT, ICI, AN]),
            ("eos".to_string(), vec![EOS]),
        ],
        if with_dog { 6 } else { 5 },
    )
    .unwrap()
}

pub const CONCEPTS: [&str; 3] = ["a", "b", "c"];

/// Concept tables over `a b c` used by the randomized suites.
pub fn table_variant(i: u64) -> ConceptTable {
    let entry = |c: &str, s: Vec<OutputId>| (c.to_string(), s);
    match i % 3 {
        0 => ConceptTable::identity(&CONCEPTS).unwrap(),
        // multi-output concepts sharing a prefix, one free output
        1 => ConceptTable::new(
            [entry("a", vec![0]), entry("b", vec![1, 2]), entry("c", vec![1, 3])],
            5,
        )
        .unwrap(),
        // a repeated-output concept, noMatch only through a broken prefix
        _ => ConceptTable::new(
            [entry("a", vec![0]), entry("b", vec![1]), entry("c", vec![2, 2])],
            3,
        )
        .unwrap(),
    }
}

pub fn concept_alphabet() -> Vec<Atom> {
    atoms(&["a", "b", "c", NO_MATCH])
}

/// Random formula with depth in `1..=4`.
pub fn seeded_formula(seed: u64) -> Formula {
    random_formula(1 + (seed % 4) as usize, &concept_alphabet(), seed)
}

pub fn seeded_chain(vocab: usize, seed: u64) -> MarkovTableScorer {
    MarkovTableScorer::random(vocab, 1.0 + (seed % 5) as f64, seed ^ 0x5eed)
}

pub fn compile_for(formula: &Formula, table: &ConceptTable) -> Dfa {
    let names: Vec<&str> = table.concepts().iter().map(String::as_str).collect();
    compile(formula, &names, &table.costs()).unwrap()
}
