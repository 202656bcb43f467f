//! Deterministic automata over a one-hot concept alphabet.
//!
//! Every compiled automaton carries, per state, the weighted distance to the
//! nearest accepting state and the set of states reachable from it. Deadlock
//! states are exactly the states at infinite distance.

mod annotate;
mod compile;
mod export;
mod minimize;

use std::fmt;

pub use compile::{compile, compile_with, CompileOptions, DEFAULT_MAX_STATES};
pub use export::{MatrixCell, MatrixJson, TransitionMatrixExport};

use crate::error::DfaError;
use crate::ltlf::NO_MATCH;

pub type StateId = u32;
pub type SymbolId = u32;

/// Output-count distance to acceptance; `INFINITE` marks deadlocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Distance(u32);

impl Distance {
    pub const ZERO: Distance = Distance(0);
    pub const INFINITE: Distance = Distance(u32::MAX);

    pub fn finite(value: u32) -> Self {
        assert!(value < u32::MAX, "distance overflow");
        Distance(value)
    }

    pub fn get(self) -> Option<u32> {
        (self != Self::INFINITE).then_some(self.0)
    }

    pub fn is_finite(self) -> bool {
        self != Self::INFINITE
    }

    /// True when the distance is at most `budget` outputs.
    pub fn within(self, budget: usize) -> bool {
        self.get().is_some_and(|d| d as usize <= budget)
    }

    pub fn plus(self, cost: u32) -> Self {
        match self.get() {
            Some(d) => Distance::finite(d.saturating_add(cost).min(u32::MAX - 1)),
            None => Self::INFINITE,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.get().map_or(f64::INFINITY, f64::from)
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.get() {
            Some(d) => write!(f, "{d}"),
            None => f.write_str("inf"),
        }
    }
}

/// A complete DFA with edge costs and distance annotations.
///
/// Symbols are the declared concepts followed by `noMatch`. A symbol with no
/// cost cannot be produced by the output side and is ignored by the
/// distance and reachability annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    symbols: Vec<String>,
    initial: StateId,
    accepting: Vec<bool>,
    delta: Vec<StateId>,
    cost: Vec<Option<u32>>,
    distance: Vec<Distance>,
    reachable: Vec<Vec<StateId>>,
}

impl Dfa {
    /// Builds and annotates an automaton from a row-major transition table.
    pub fn from_parts(
        symbols: Vec<String>,
        initial: StateId,
        accepting: Vec<bool>,
        delta: Vec<StateId>,
        cost: Vec<Option<u32>>,
    ) -> Result<Self, DfaError> {
        let n = accepting.len();
        let m = symbols.len();
        if n == 0 {
            return Err(DfaError::Malformed("no states".into()));
        }
        if symbols.last().map(String::as_str) != Some(NO_MATCH) {
            return Err(DfaError::Malformed(format!(
                "the last symbol must be `{NO_MATCH}`"
            )));
        }
        if delta.len() != n * m {
            return Err(DfaError::Malformed(format!(
                "transition table has {} cells, expected {}",
                delta.len(),
                n * m
            )));
        }
        if cost.len() != m {
            return Err(DfaError::Malformed("cost vector length mismatch".into()));
        }
        if cost.iter().any(|c| *c == Some(0)) {
            return Err(DfaError::Malformed("edge costs must be positive".into()));
        }
        if initial as usize >= n || delta.iter().any(|&q| q as usize >= n) {
            return Err(DfaError::Malformed("state id out of range".into()));
        }
        let mut dfa = Dfa {
            symbols,
            initial,
            accepting,
            delta,
            cost,
            distance: Vec::new(),
            reachable: Vec::new(),
        };
        dfa.annotate();
        Ok(dfa)
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol_name(&self, symbol: SymbolId) -> &str {
        &self.symbols[symbol as usize]
    }

    pub fn symbol_index(&self, name: &str) -> Option<SymbolId> {
        self.symbols
            .iter()
            .position(|s| s == name)
            .map(|i| i as SymbolId)
    }

    pub fn no_match(&self) -> SymbolId {
        (self.symbols.len() - 1) as SymbolId
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, state: StateId) -> bool {
        self.accepting[state as usize]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states() as StateId).filter(|&q| self.is_accepting(q))
    }

    pub fn step(&self, state: StateId, symbol: SymbolId) -> StateId {
        self.delta[state as usize * self.symbols.len() + symbol as usize]
    }

    pub fn cost(&self, symbol: SymbolId) -> Option<u32> {
        self.cost[symbol as usize]
    }

    pub fn distance(&self, state: StateId) -> Distance {
        self.distance[state as usize]
    }

    pub fn distances(&self) -> &[Distance] {
        &self.distance
    }

    /// States reachable from `state` (itself included), sorted.
    pub fn reachable(&self, state: StateId) -> &[StateId] {
        &self.reachable[state as usize]
    }

    pub fn is_deadlock(&self, state: StateId) -> bool {
        !self.distance(state).is_finite()
    }

    pub fn deadlocks(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states() as StateId).filter(|&q| self.is_deadlock(q))
    }

    pub fn run(&self, symbols: &[SymbolId]) -> StateId {
        symbols.iter().fold(self.initial, |q, &s| self.step(q, s))
    }

    pub fn accepts_symbols(&self, symbols: &[SymbolId]) -> bool {
        self.is_accepting(self.run(symbols))
    }

    /// Runs the automaton on concept names; the empty trace is accepted iff
    /// the initial state is accepting.
    pub fn accepts<S: AsRef<str>>(&self, trace: &[S]) -> Result<bool, DfaError> {
        let ids = trace
            .iter()
            .map(|name| {
                self.symbol_index(name.as_ref())
                    .ok_or_else(|| DfaError::UnknownSymbol(name.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.accepts_symbols(&ids))
    }
}
