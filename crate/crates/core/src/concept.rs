//! Mapping between model outputs and automaton concepts.
//!
//! Each concept `c` has a canonical output sequence `μ(c)`. Outputs are
//! consumed one at a time against a trie of these sequences:
//!
//! * completing some `μ(c)` emits `c` and clears the pending buffer; the
//!   earliest completion wins, so a concept whose sequence extends another
//!   concept's sequence is shadowed;
//! * extending the pending buffer to a strict prefix of some `μ(c)` keeps it
//!   pending;
//! * anything else flushes the pending buffer together with the new output
//!   as a single `noMatch`.
//!
//! At the end of a sequence a non-empty pending buffer is flushed as one
//! `noMatch`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde_json::{Map, Value};

use crate::dfa::{Dfa, Distance, StateId, SymbolId};
use crate::error::ConceptError;
use crate::ltlf::{Atom, NO_MATCH};

pub type OutputId = u32;

/// The only supported `noMatch_policy` header value.
pub const FLUSH_ONE: &str = "flush-one";

/// Concept-level reading of one output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Concept(u32),
    NoMatch,
    Pending,
}

/// Position in the concept trie; the default value is the empty buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct MatchState {
    node: u32,
}

impl MatchState {
    pub const EMPTY: MatchState = MatchState { node: 0 };

    pub fn is_empty(self) -> bool {
        self.node == 0
    }

    pub(crate) fn node(self) -> usize {
        self.node as usize
    }
}

#[derive(Debug, Clone)]
struct TrieNode {
    children: HashMap<OutputId, u32>,
    complete: Option<u32>,
    depth: u32,
    parent: u32,
    edge: OutputId,
    /// Completable concepts whose sequence starts with this node's path.
    below: Vec<u32>,
}

/// Concept table: `μ` for every concept plus the prefix trie used by `ν`.
#[derive(Debug, Clone)]
pub struct ConceptTable {
    concepts: Vec<String>,
    sequences: Vec<Vec<OutputId>>,
    vocab_size: usize,
    nodes: Vec<TrieNode>,
    shadowed: Vec<bool>,
}

impl ConceptTable {
    /// Builds a table; concepts are stored sorted by name.
    pub fn new(
        entries: impl IntoIterator<Item = (String, Vec<OutputId>)>,
        vocab_size: usize,
    ) -> Result<Self, ConceptError> {
        let mut sorted: BTreeMap<String, Vec<OutputId>> = BTreeMap::new();
        for (name, seq) in entries {
            if name == NO_MATCH || !Atom::is_valid_name(&name) {
                return Err(ConceptError::Malformed(format!(
                    "invalid concept name `{name}`"
                )));
            }
            if seq.is_empty() {
                return Err(ConceptError::EmptySequence(name));
            }
            if let Some(&output) = seq.iter().find(|&&o| o as usize >= vocab_size) {
                return Err(ConceptError::UnknownOutput {
                    output,
                    vocab: vocab_size,
                });
            }
            if sorted.insert(name.clone(), seq).is_some() {
                return Err(ConceptError::Malformed(format!(
                    "duplicate concept `{name}`"
                )));
            }
        }
        let (concepts, sequences): (Vec<_>, Vec<_>) = sorted.into_iter().unzip();

        let mut nodes = vec![TrieNode {
            children: HashMap::new(),
            complete: None,
            depth: 0,
            parent: 0,
            edge: 0,
            below: Vec::new(),
        }];
        for (c, seq) in sequences.iter().enumerate() {
            let mut node = 0usize;
            for &output in seq {
                node = match nodes[node].children.get(&output) {
                    Some(&child) => child as usize,
                    None => {
                        let child = nodes.len();
                        let depth = nodes[node].depth + 1;
                        nodes.push(TrieNode {
                            children: HashMap::new(),
                            complete: None,
                            depth,
                            parent: node as u32,
                            edge: output,
                            below: Vec::new(),
                        });
                        nodes[node].children.insert(output, child as u32);
                        child
                    }
                };
            }
            if let Some(other) = nodes[node].complete {
                return Err(ConceptError::Collision(
                    concepts[other as usize].clone(),
                    concepts[c].clone(),
                ));
            }
            nodes[node].complete = Some(c as u32);
        }

        // A concept is shadowed when a proper prefix of its sequence
        // completes another concept.
        let mut shadowed = vec![false; concepts.len()];
        for (c, seq) in sequences.iter().enumerate() {
            let mut node = 0usize;
            let mut path = Vec::with_capacity(seq.len());
            for (i, output) in seq.iter().enumerate() {
                node = nodes[node].children[output] as usize;
                if i + 1 < seq.len() && nodes[node].complete.is_some() {
                    shadowed[c] = true;
                }
                path.push(node);
            }
            if !shadowed[c] {
                nodes[0].below.push(c as u32);
                for n in path {
                    nodes[n].below.push(c as u32);
                }
            }
        }

        Ok(ConceptTable {
            concepts,
            sequences,
            vocab_size,
            nodes,
            shadowed,
        })
    }

    /// Classification-style table: concept `i` is output `i`.
    pub fn identity(labels: &[impl AsRef<str>]) -> Result<Self, ConceptError> {
        Self::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.as_ref().to_string(), vec![i as OutputId])),
            labels.len(),
        )
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn concept_index(&self, name: &str) -> Option<u32> {
        self.concepts
            .binary_search_by(|c| c.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    pub fn concept_name(&self, concept: u32) -> &str {
        &self.concepts[concept as usize]
    }

    /// `μ(c)`.
    pub fn sequence(&self, concept: u32) -> &[OutputId] {
        &self.sequences[concept as usize]
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn is_shadowed(&self, concept: u32) -> bool {
        self.shadowed[concept as usize]
    }

    /// Outputs needed to produce `c`, i.e. `|μ(c)|`.
    pub fn cost(&self, concept: u32) -> u32 {
        self.sequences[concept as usize].len() as u32
    }

    /// Fewest outputs that produce a `noMatch` from an empty buffer: one
    /// more than the shallowest live prefix that some output breaks.
    pub fn no_match_cost(&self) -> Option<u32> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| {
                n.complete.is_none() && self.breaking_available(MatchState { node: *i as u32 })
            })
            .map(|(_, n)| n.depth + 1)
            .min()
    }

    /// Fewest outputs that leave the buffer pending, i.e. the cost of a
    /// `noMatch` produced by the end-of-sequence flush.
    pub fn end_flush_cost(&self) -> Option<u32> {
        self.nodes
            .iter()
            .filter(|n| n.depth > 0 && n.complete.is_none())
            .map(|n| n.depth)
            .min()
    }

    pub(crate) fn breaking_available(&self, state: MatchState) -> bool {
        self.nodes[state.node()].children.len() < self.vocab_size
    }

    /// Edge costs for automaton compilation: `|μ(c)|` per concept, and
    /// [`Self::no_match_cost`] for `noMatch` when it can be produced at all.
    pub fn costs(&self) -> HashMap<String, u32> {
        let mut costs: HashMap<String, u32> = self
            .concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), self.cost(i as u32)))
            .collect();
        if let Some(c) = self.no_match_cost() {
            costs.insert(NO_MATCH.to_string(), c);
        }
        costs
    }

    /// The pending outputs represented by `state`.
    pub fn pending(&self, state: MatchState) -> Vec<OutputId> {
        let mut out = Vec::with_capacity(self.nodes[state.node()].depth as usize);
        let mut node = state.node();
        while node != 0 {
            out.push(self.nodes[node].edge);
            node = self.nodes[node].parent as usize;
        }
        out.reverse();
        out
    }

    pub(crate) fn pending_len(&self, state: MatchState) -> u32 {
        self.nodes[state.node()].depth
    }

    /// Buffer state reached by feeding `pending`, if it is a live prefix.
    pub fn match_state(&self, pending: &[OutputId]) -> Option<MatchState> {
        let mut node = 0usize;
        for output in pending {
            node = *self.nodes[node].children.get(output)? as usize;
            if self.nodes[node].complete.is_some() {
                return None;
            }
        }
        Some(MatchState { node: node as u32 })
    }

    /// Consumes one output.
    pub fn advance(&self, state: MatchState, output: OutputId) -> (Step, MatchState) {
        match self.nodes[state.node()].children.get(&output) {
            Some(&child) => match self.nodes[child as usize].complete {
                Some(c) => (Step::Concept(c), MatchState::EMPTY),
                None => (Step::Pending, MatchState { node: child }),
            },
            None => (Step::NoMatch, MatchState::EMPTY),
        }
    }

    /// Children of a buffer state as `(output, step, next state)`.
    pub(crate) fn transitions(
        &self,
        state: MatchState,
    ) -> impl Iterator<Item = (OutputId, Step, MatchState)> + '_ {
        self.nodes[state.node()]
            .children
            .iter()
            .map(
                move |(&output, &child)| match self.nodes[child as usize].complete {
                    Some(c) => (output, Step::Concept(c), MatchState::EMPTY),
                    None => (output, Step::Pending, MatchState { node: child }),
                },
            )
    }

    pub(crate) fn num_children(&self, state: MatchState) -> usize {
        self.nodes[state.node()].children.len()
    }

    pub(crate) fn is_child(&self, state: MatchState, output: OutputId) -> bool {
        self.nodes[state.node()].children.contains_key(&output)
    }

    pub(crate) fn num_match_states(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn match_state_at(&self, node: usize) -> Option<MatchState> {
        (self.nodes[node].complete.is_none()).then_some(MatchState { node: node as u32 })
    }

    /// Concepts still completable from `state`, excluding shadowed ones.
    pub(crate) fn completable(&self, state: MatchState) -> &[u32] {
        &self.nodes[state.node()].below
    }

    /// `COMPATIBLE(pending · next, c)`: the outputs are a prefix of `μ(c)`.
    pub fn compatible(&self, pending: &[OutputId], next: OutputId, concept: u32) -> bool {
        let seq = self.sequence(concept);
        seq.len() > pending.len() && seq.starts_with(pending) && seq[pending.len()] == next
    }

    /// `ν`: segments an output sequence into concepts and `noMatch` fillers.
    pub fn nu(&self, outputs: &[OutputId]) -> Vec<Step> {
        let mut state = MatchState::EMPTY;
        let mut out = Vec::new();
        for &o in outputs {
            let (step, next) = self.advance(state, o);
            if step != Step::Pending {
                out.push(step);
            }
            state = next;
        }
        if !state.is_empty() {
            out.push(Step::NoMatch);
        }
        out
    }

    /// `ν` rendered as concept names.
    pub fn nu_names(&self, outputs: &[OutputId]) -> Vec<String> {
        self.nu(outputs)
            .into_iter()
            .map(|s| self.step_name(s).to_string())
            .collect()
    }

    pub fn step_name(&self, step: Step) -> &str {
        match step {
            Step::Concept(c) => self.concept_name(c),
            Step::NoMatch => NO_MATCH,
            Step::Pending => "",
        }
    }

    /// Parses the table file: a JSON object mapping concepts to output ids,
    /// with optional `noMatch_policy` (must be `flush-one`) and `vocab_size`
    /// headers. `vocab_size` overrides the header when given.
    pub fn from_json_str(text: &str, vocab_size: Option<usize>) -> Result<Self, ConceptError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConceptError::Malformed(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(ConceptError::Malformed("expected a JSON object".into()));
        };
        let mut entries = Vec::new();
        let mut header_vocab = None;
        for (key, value) in map {
            match key.as_str() {
                "noMatch_policy" => match value.as_str() {
                    Some(FLUSH_ONE) => {}
                    other => {
                        return Err(ConceptError::Policy(
                            other.map_or_else(|| value.to_string(), str::to_string),
                        ))
                    }
                },
                "vocab_size" => {
                    header_vocab = Some(value.as_u64().ok_or_else(|| {
                        ConceptError::Malformed("vocab_size must be an integer".into())
                    })? as usize)
                }
                _ => {
                    let seq: Vec<OutputId> = serde_json::from_value(value)
                        .map_err(|e| ConceptError::Malformed(format!("concept `{key}`: {e}")))?;
                    entries.push((key, seq));
                }
            }
        }
        let vocab = vocab_size.or(header_vocab).ok_or_else(|| {
            ConceptError::Malformed("vocabulary size is neither given nor in the header".into())
        })?;
        Self::new(entries, vocab)
    }

    pub fn to_json_string(&self) -> String {
        let mut map = Map::new();
        map.insert("noMatch_policy".into(), Value::from(FLUSH_ONE));
        map.insert("vocab_size".into(), Value::from(self.vocab_size));
        for (c, seq) in self.concepts.iter().zip(&self.sequences) {
            map.insert(c.clone(), Value::from(seq.clone()));
        }
        serde_json::to_string_pretty(&Value::Object(map)).expect("table serializes")
    }
}

/// Reverse Dijkstra over the steps the table can actually produce.
fn finish_distances(dfa: &Dfa, table: &ConceptTable, symbol_of: &[SymbolId]) -> Vec<Distance> {
    let n = dfa.num_states();
    let mut edges: Vec<(SymbolId, u32)> = symbol_of
        .iter()
        .enumerate()
        .filter(|&(c, _)| !table.is_shadowed(c as u32))
        .map(|(c, &s)| (s, table.cost(c as u32)))
        .collect();
    if let Some(cost) = table.no_match_cost() {
        edges.push((dfa.no_match(), cost));
    }
    let mut preds: Vec<Vec<(StateId, u32)>> = vec![Vec::new(); n];
    for q in 0..n as StateId {
        for &(s, cost) in &edges {
            preds[dfa.step(q, s) as usize].push((q, cost));
        }
    }
    let flush = table.end_flush_cost();
    let mut dist = vec![Distance::INFINITE; n];
    let mut heap = BinaryHeap::new();
    for q in 0..n as StateId {
        let d = if dfa.is_accepting(q) {
            Some(0)
        } else {
            flush.filter(|_| dfa.is_accepting(dfa.step(q, dfa.no_match())))
        };
        if let Some(d) = d {
            dist[q as usize] = Distance::finite(d);
            heap.push(Reverse((d, q)));
        }
    }
    while let Some(Reverse((d, q))) = heap.pop() {
        if dist[q as usize] != Distance::finite(d) {
            continue;
        }
        for &(p, cost) in &preds[q as usize] {
            let nd = d + cost;
            if Distance::finite(nd) < dist[p as usize] {
                dist[p as usize] = Distance::finite(nd);
                heap.push(Reverse((nd, p)));
            }
        }
    }
    dist
}

/// A concept table bound to an automaton alphabet.
#[derive(Debug, Clone)]
pub struct Guide<'a> {
    dfa: &'a Dfa,
    table: &'a ConceptTable,
    symbol_of: Vec<SymbolId>,
    // shortest completion from each state with an empty buffer
    finish: Vec<Distance>,
}

impl<'a> Guide<'a> {
    /// Every table concept must be a symbol of `dfa`.
    pub fn new(dfa: &'a Dfa, table: &'a ConceptTable) -> Result<Self, ConceptError> {
        let symbol_of = table
            .concepts()
            .iter()
            .map(|c| {
                dfa.symbol_index(c)
                    .ok_or_else(|| ConceptError::NotInAlphabet(c.clone()))
            })
            .collect::<Result<Vec<SymbolId>, _>>()?;
        let finish = finish_distances(dfa, table, &symbol_of);
        Ok(Guide {
            dfa,
            table,
            symbol_of,
            finish,
        })
    }

    pub fn dfa(&self) -> &'a Dfa {
        self.dfa
    }

    pub fn table(&self) -> &'a ConceptTable {
        self.table
    }

    pub fn symbol(&self, concept: u32) -> SymbolId {
        self.symbol_of[concept as usize]
    }

    /// Automaton state after a concept-level step.
    pub fn apply(&self, state: StateId, step: Step) -> StateId {
        match step {
            Step::Concept(c) => self.dfa.step(state, self.symbol(c)),
            Step::NoMatch => self.dfa.step(state, self.dfa.no_match()),
            Step::Pending => state,
        }
    }

    fn check_output(&self, output: OutputId) -> Result<(), ConceptError> {
        if (output as usize) < self.table.vocab_size() {
            Ok(())
        } else {
            Err(ConceptError::UnknownOutput {
                output,
                vocab: self.table.vocab_size(),
            })
        }
    }

    /// `NEXTSTATE(current, x, x_<t)` together with the updated buffer.
    pub fn next_state(
        &self,
        current: StateId,
        output: OutputId,
        pending: MatchState,
    ) -> Result<(StateId, MatchState), ConceptError> {
        self.check_output(output)?;
        let (step, next) = self.table.advance(pending, output);
        Ok((self.apply(current, step), next))
    }

    /// `BESTQUASINEXTSTATE(current, x, x_<t)`: among concepts whose `μ`
    /// extends the buffer plus `output`, the successor of `current` with the
    /// smallest distance (ties to the lowest concept index).
    pub fn best_quasi_next_state(
        &self,
        current: StateId,
        output: OutputId,
        pending: MatchState,
    ) -> Option<StateId> {
        let child = *self.table.nodes[pending.node()].children.get(&output)?;
        self.table.nodes[child as usize]
            .below
            .iter()
            .map(|&c| self.dfa.step(current, self.symbol(c)))
            .min_by_key(|&q| self.dfa.distance(q))
    }

    /// Whether a sequence may stop in this configuration; a non-empty
    /// buffer is flushed as `noMatch` first.
    pub fn is_final(&self, state: StateId, pending: MatchState) -> bool {
        if pending.is_empty() {
            self.dfa.is_accepting(state)
        } else {
            self.dfa
                .is_accepting(self.dfa.step(state, self.dfa.no_match()))
        }
    }

    /// Fewest further outputs to reach a final configuration, counting
    /// concept lengths and the end-of-sequence flush.
    pub fn effective_distance(&self, state: StateId, pending: MatchState) -> Distance {
        if pending.is_empty() {
            return self.finish[state as usize];
        }
        if self.is_final(state, pending) {
            return Distance::ZERO;
        }
        let done = self.table.pending_len(pending);
        let mut best = Distance::INFINITE;
        for &c in self.table.completable(pending) {
            let left = self.table.cost(c) - done;
            let d = self.finish[self.dfa.step(state, self.symbol(c)) as usize].plus(left);
            best = best.min(d);
        }
        if self.table.breaking_available(pending) {
            let d = self.finish[self.dfa.step(state, self.dfa.no_match()) as usize].plus(1);
            best = best.min(d);
        }
        best
    }

    /// Feeds `outputs` from `state` with an empty buffer.
    pub fn run_from(
        &self,
        state: StateId,
        outputs: &[OutputId],
    ) -> Result<(StateId, MatchState), ConceptError> {
        outputs
            .iter()
            .try_fold((state, MatchState::EMPTY), |(q, m), &o| {
                self.next_state(q, o, m)
            })
    }

    /// Whether `ν(outputs)` is accepted, with the end-of-sequence flush.
    pub fn accepts_outputs(&self, outputs: &[OutputId]) -> Result<bool, ConceptError> {
        let (q, m) = self.run_from(self.dfa.initial(), outputs)?;
        Ok(self.is_final(q, m))
    }
}
