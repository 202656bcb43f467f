use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Dfa, StateId};
use crate::error::DfaError;

/// One cell of the transition matrix: outputs needed for the symbol, and the
/// state reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub cost: Option<u32>,
    pub next: StateId,
}

/// Rows are states, columns are symbols, both in automaton order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrixExport {
    pub states: Vec<StateId>,
    pub symbols: Vec<String>,
    pub rows: Vec<Vec<MatrixCell>>,
}

/// On-disk form of an annotated automaton. Field order is part of the format.
/// Unusable symbols have a `null` cost and deadlocks a `null` distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub states: Vec<StateId>,
    pub initial: StateId,
    pub accepting: Vec<StateId>,
    pub concepts: Vec<String>,
    pub cost: BTreeMap<String, Option<u32>>,
    pub delta: Vec<Vec<StateId>>,
    pub distance: Vec<Option<u32>>,
}

impl Dfa {
    pub fn export_matrix(&self) -> TransitionMatrixExport {
        let states: Vec<StateId> = (0..self.num_states() as StateId).collect();
        let rows = states
            .iter()
            .map(|&q| {
                (0..self.num_symbols() as u32)
                    .map(|s| MatrixCell {
                        cost: self.cost(s),
                        next: self.step(q, s),
                    })
                    .collect()
            })
            .collect();
        TransitionMatrixExport {
            states,
            symbols: self.symbols.clone(),
            rows,
        }
    }

    pub fn to_matrix_json(&self) -> MatrixJson {
        let m = self.num_symbols();
        MatrixJson {
            states: (0..self.num_states() as StateId).collect(),
            initial: self.initial,
            accepting: self.accepting_states().collect(),
            concepts: self.symbols.clone(),
            cost: self
                .symbols
                .iter()
                .zip(&self.cost)
                .map(|(s, c)| (s.clone(), *c))
                .collect(),
            delta: self.delta.chunks(m).map(<[StateId]>::to_vec).collect(),
            distance: self.distance.iter().map(|d| d.get()).collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_matrix_json()).expect("matrix serializes")
    }

    /// Rebuilds an automaton from its matrix form. Distances and reachable
    /// sets are recomputed, and a stored distance vector that disagrees
    /// with the recomputed one is rejected.
    pub fn from_matrix_json(json: &MatrixJson) -> Result<Dfa, DfaError> {
        let n = json.states.len();
        if json
            .states
            .iter()
            .enumerate()
            .any(|(i, &q)| q as usize != i)
        {
            return Err(DfaError::Malformed("states must be 0..n in order".into()));
        }
        if json.delta.len() != n {
            return Err(DfaError::Malformed(
                "one delta row per state required".into(),
            ));
        }
        let mut accepting = vec![false; n];
        for &q in &json.accepting {
            *accepting.get_mut(q as usize).ok_or_else(|| {
                DfaError::Malformed(format!("accepting state {q} out of range"))
            })? = true;
        }
        let mut cost = Vec::with_capacity(json.concepts.len());
        for s in &json.concepts {
            let c = json
                .cost
                .get(s)
                .ok_or_else(|| DfaError::Malformed(format!("no cost entry for `{s}`")))?;
            cost.push(*c);
        }
        let mut delta = Vec::with_capacity(n * json.concepts.len());
        for row in &json.delta {
            if row.len() != json.concepts.len() {
                return Err(DfaError::Malformed("delta row width mismatch".into()));
            }
            delta.extend_from_slice(row);
        }
        let dfa = Dfa::from_parts(json.concepts.clone(), json.initial, accepting, delta, cost)?;
        let recomputed: Vec<Option<u32>> = dfa.distance.iter().map(|d| d.get()).collect();
        if !json.distance.is_empty() && recomputed != json.distance {
            return Err(DfaError::Malformed(
                "stored distances disagree with the transition table".into(),
            ));
        }
        Ok(dfa)
    }

    pub fn from_json_str(text: &str) -> Result<Dfa, DfaError> {
        let json: MatrixJson =
            serde_json::from_str(text).map_err(|e| DfaError::Malformed(e.to_string()))?;
        Dfa::from_matrix_json(&json)
    }

    /// Graphviz rendering: accepting states double-circled, deadlocks red,
    /// parallel edges merged into one label of `symbol/cost` entries.
    pub fn export_dot(&self) -> String {
        let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  __start [shape=point];\n");
        let _ = writeln!(out, "  __start -> s{};", self.initial);
        for q in 0..self.num_states() as StateId {
            let shape = if self.is_accepting(q) {
                "doublecircle"
            } else {
                "circle"
            };
            let extra = if self.is_deadlock(q) {
                ", color=red, fontcolor=red"
            } else if self.is_accepting(q) {
                ", color=darkgreen"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  s{q} [shape={shape}, label=\"s{q}\\nd={}\"{extra}];",
                self.distance(q)
            );
        }
        for q in 0..self.num_states() as StateId {
            let mut by_target: BTreeMap<StateId, Vec<String>> = BTreeMap::new();
            for s in 0..self.num_symbols() as u32 {
                let label = match self.cost(s) {
                    Some(c) => format!("{}/{c}", self.symbol_name(s)),
                    None => self.symbol_name(s).to_string(),
                };
                by_target.entry(self.step(q, s)).or_default().push(label);
            }
            for (target, labels) in by_target {
                let _ = writeln!(
                    out,
                    "  s{q} -> s{target} [label=\"{}\"];",
                    labels.join(", ")
                );
            }
        }
        out.push_str("}\n");
        out
    }
}
