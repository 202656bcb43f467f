//! Formula progression over one-hot symbols.
//!
//! A state is a residual obligation on the remaining suffix of the trace,
//! kept as an absorbed disjunctive normal form over the non-boolean
//! subformulas of the input. There are finitely many such forms, so the
//! construction terminates. Residuals live in negation normal form with two extra
//! constants: `Live` (the suffix is non-empty) and `End` (the suffix is
//! empty). A residual `r` is met by a suffix `u` when `u` is non-empty and
//! `u, 0 ⊨ r`, or when `u` is empty and `r` is accepting under
//! [`Interner::accepting`].

use std::collections::{HashMap, VecDeque};

use super::minimize::minimize;
use super::{Dfa, StateId};
use crate::error::CompileError;
use crate::ltlf::{Formula, NO_MATCH};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub max_states: usize,
    pub minimize: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_states: DEFAULT_MAX_STATES,
            minimize: true,
        }
    }
}

type NodeId = u32;

const TRUE: NodeId = 0;
const FALSE: NodeId = 1;
const LIVE: NodeId = 2;
const END: NodeId = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Live,
    End,
    Lit { symbol: u32, positive: bool },
    And(Box<[NodeId]>),
    Or(Box<[NodeId]>),
    Next(NodeId),
    WeakNext(NodeId),
    Until(NodeId, NodeId),
    Release(NodeId, NodeId),
}

type Clause = Vec<NodeId>;

fn is_subset(small: &[NodeId], big: &[NodeId]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

struct Interner {
    nodes: Vec<Node>,
    ids: HashMap<Node, NodeId>,
    progress_memo: HashMap<(NodeId, u32), NodeId>,
    dnf_memo: HashMap<NodeId, Vec<Clause>>,
}

impl Interner {
    fn new() -> Self {
        let mut interner = Interner {
            nodes: Vec::new(),
            ids: HashMap::new(),
            progress_memo: HashMap::new(),
            dnf_memo: HashMap::new(),
        };
        for node in [Node::True, Node::False, Node::Live, Node::End] {
            interner.intern(node);
        }
        interner
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.ids.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node.clone());
        self.ids.insert(node, id);
        id
    }

    fn and(&mut self, parts: impl IntoIterator<Item = NodeId>) -> NodeId {
        let mut flat = Vec::new();
        for p in parts {
            match &self.nodes[p as usize] {
                Node::True => {}
                Node::False => return FALSE,
                Node::And(children) => flat.extend_from_slice(children),
                _ => flat.push(p),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        if flat.contains(&LIVE) && flat.contains(&END) {
            return FALSE;
        }
        match flat.len() {
            0 => TRUE,
            1 => flat[0],
            _ => self.intern(Node::And(flat.into_boxed_slice())),
        }
    }

    fn or(&mut self, parts: impl IntoIterator<Item = NodeId>) -> NodeId {
        let mut flat = Vec::new();
        for p in parts {
            match &self.nodes[p as usize] {
                Node::False => {}
                Node::True => return TRUE,
                Node::Or(children) => flat.extend_from_slice(children),
                _ => flat.push(p),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        if flat.contains(&LIVE) && flat.contains(&END) {
            return TRUE;
        }
        match flat.len() {
            0 => FALSE,
            1 => flat[0],
            _ => self.intern(Node::Or(flat.into_boxed_slice())),
        }
    }

    /// Negation normal form of `formula` (negated when `negate`).
    fn nnf(
        &mut self,
        formula: &Formula,
        negate: bool,
        symbol_of: &HashMap<&str, u32>,
    ) -> Result<NodeId, CompileError> {
        use Formula as F;
        Ok(match formula {
            F::True => {
                if negate {
                    FALSE
                } else {
                    TRUE
                }
            }
            F::Atom(a) => {
                let symbol = *symbol_of
                    .get(a.as_str())
                    .ok_or_else(|| CompileError::UnknownAtom(a.to_string()))?;
                self.intern(Node::Lit {
                    symbol,
                    positive: !negate,
                })
            }
            F::Not(f) => self.nnf(f, !negate, symbol_of)?,
            F::And(a, b) | F::Or(a, b) => {
                let a = self.nnf(a, negate, symbol_of)?;
                let b = self.nnf(b, negate, symbol_of)?;
                if matches!(formula, F::And(..)) != negate {
                    self.and([a, b])
                } else {
                    self.or([a, b])
                }
            }
            F::Next(f) | F::WeakNext(f) => {
                let inner = self.nnf(f, negate, symbol_of)?;
                if matches!(formula, F::Next(_)) != negate {
                    self.intern(Node::Next(inner))
                } else {
                    self.intern(Node::WeakNext(inner))
                }
            }
            F::Until(a, b) | F::Release(a, b) => {
                let a = self.nnf(a, negate, symbol_of)?;
                let b = self.nnf(b, negate, symbol_of)?;
                if matches!(formula, F::Until(..)) != negate {
                    self.intern(Node::Until(a, b))
                } else {
                    self.intern(Node::Release(a, b))
                }
            }
            // F f = true U f, G f = false R f
            F::Eventually(f) | F::Always(f) => {
                let inner = self.nnf(f, negate, symbol_of)?;
                if matches!(formula, F::Eventually(_)) != negate {
                    self.intern(Node::Until(TRUE, inner))
                } else {
                    self.intern(Node::Release(FALSE, inner))
                }
            }
        })
    }

    /// Sorts clauses, drops contradictory ones and removes clauses that
    /// contain another clause.
    fn simplify(&self, clauses: Vec<Clause>) -> Vec<Clause> {
        let mut clean: Vec<Clause> = Vec::with_capacity(clauses.len());
        for mut c in clauses {
            c.sort_unstable();
            c.dedup();
            if c.binary_search(&END).is_ok() {
                // An empty suffix refutes every obligation on a current
                // instant and meets weak ones.
                let refuted = c.iter().any(|&k| {
                    matches!(
                        self.nodes[k as usize],
                        Node::Live | Node::Lit { .. } | Node::Next(_) | Node::Until(..)
                    )
                });
                if refuted {
                    continue;
                }
                c = vec![END];
            }
            clean.push(c);
        }
        clean.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        clean.dedup();
        let mut kept: Vec<Clause> = Vec::with_capacity(clean.len());
        for c in clean {
            if !kept.iter().any(|k| is_subset(k, &c)) {
                kept.push(c);
            }
        }
        kept.sort_unstable();
        kept
    }

    fn dnf(&mut self, id: NodeId) -> Vec<Clause> {
        if let Some(d) = self.dnf_memo.get(&id) {
            return d.clone();
        }
        let result = match self.nodes[id as usize].clone() {
            Node::True => vec![Vec::new()],
            Node::False => Vec::new(),
            Node::And(children) => {
                let mut acc: Vec<Clause> = vec![Vec::new()];
                for &c in children.iter() {
                    let d = self.dnf(c);
                    let mut product = Vec::with_capacity(acc.len() * d.len());
                    for left in &acc {
                        for right in &d {
                            product.push(left.iter().chain(right).copied().collect());
                        }
                    }
                    acc = self.simplify(product);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            Node::Or(children) => {
                let mut all = Vec::new();
                for &c in children.iter() {
                    all.extend(self.dnf(c));
                }
                self.simplify(all)
            }
            _ => vec![vec![id]],
        };
        self.dnf_memo.insert(id, result.clone());
        result
    }

    /// Canonical node for the residual: equal normal forms share an id.
    fn canonical(&mut self, id: NodeId) -> NodeId {
        let clauses = self.dnf(id);
        let parts: Vec<NodeId> = clauses.into_iter().map(|c| self.and(c)).collect();
        self.or(parts)
    }

    /// Whether the empty suffix meets residual `id`.
    fn accepting(&self, id: NodeId) -> bool {
        match &self.nodes[id as usize] {
            Node::True | Node::End | Node::WeakNext(_) | Node::Release(..) => true,
            Node::False | Node::Live | Node::Lit { .. } | Node::Next(_) | Node::Until(..) => false,
            Node::And(c) => c.iter().all(|&k| self.accepting(k)),
            Node::Or(c) => c.iter().any(|&k| self.accepting(k)),
        }
    }

    /// Residual after reading `symbol` at the current instant.
    fn progress(&mut self, id: NodeId, symbol: u32) -> NodeId {
        if let Some(&r) = self.progress_memo.get(&(id, symbol)) {
            return r;
        }
        let node = self.nodes[id as usize].clone();
        let result = match node {
            Node::True | Node::Live => TRUE,
            Node::False | Node::End => FALSE,
            Node::Lit {
                symbol: s,
                positive,
            } => {
                if (s == symbol) == positive {
                    TRUE
                } else {
                    FALSE
                }
            }
            Node::And(children) => {
                let parts: Vec<_> = children.iter().map(|&c| self.progress(c, symbol)).collect();
                self.and(parts)
            }
            Node::Or(children) => {
                let parts: Vec<_> = children.iter().map(|&c| self.progress(c, symbol)).collect();
                self.or(parts)
            }
            Node::Next(f) => self.and([f, LIVE]),
            Node::WeakNext(f) => self.or([f, END]),
            // a U b = b | (a & X(a U b)); the residual `a U b` already
            // rejects the empty suffix, so the Live guard is implied.
            Node::Until(a, b) => {
                let pb = self.progress(b, symbol);
                let pa = self.progress(a, symbol);
                let stay = self.and([pa, id]);
                self.or([pb, stay])
            }
            // a R b = b & (a | WX(a R b)); likewise `a R b` accepts the empty suffix.
            Node::Release(a, b) => {
                let pb = self.progress(b, symbol);
                let pa = self.progress(a, symbol);
                let stay = self.or([pa, id]);
                self.and([pb, stay])
            }
        };
        self.progress_memo.insert((id, symbol), result);
        result
    }
}

/// Compiles with default options (state cap 10⁶, minimization on).
pub fn compile(
    formula: &Formula,
    concepts: &[impl AsRef<str>],
    costs: &HashMap<String, u32>,
) -> Result<Dfa, CompileError> {
    compile_with(formula, concepts, costs, &CompileOptions::default())
}

/// Compiles `formula` over the one-hot alphabet `concepts ∪ {noMatch}`.
///
/// Every concept needs a cost ≥ 1. `noMatch` is optional in `costs`; without
/// one it is treated as a symbol the output side can never produce.
pub fn compile_with(
    formula: &Formula,
    concepts: &[impl AsRef<str>],
    costs: &HashMap<String, u32>,
    options: &CompileOptions,
) -> Result<Dfa, CompileError> {
    let mut symbols: Vec<String> = Vec::with_capacity(concepts.len() + 1);
    for c in concepts {
        let c = c.as_ref();
        if c == NO_MATCH {
            continue;
        }
        if symbols.iter().any(|s| s == c) {
            return Err(CompileError::DuplicateConcept(c.to_string()));
        }
        symbols.push(c.to_string());
    }
    symbols.push(NO_MATCH.to_string());

    let mut cost = Vec::with_capacity(symbols.len());
    for s in &symbols {
        match costs.get(s) {
            Some(&c) if c > 0 => cost.push(Some(c)),
            _ if s == NO_MATCH => cost.push(None),
            _ => return Err(CompileError::MissingCost(s.clone())),
        }
    }

    let symbol_of: HashMap<&str, u32> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();

    let mut interner = Interner::new();
    let nnf = interner.nnf(formula, false, &symbol_of)?;
    let root = interner.canonical(nnf);

    let m = symbols.len();
    let mut residuals = vec![root];
    let mut state_of = HashMap::from([(root, 0 as StateId)]);
    let mut delta: Vec<StateId> = Vec::new();
    let mut queue = VecDeque::from([0 as StateId]);
    while let Some(q) = queue.pop_front() {
        let residual = residuals[q as usize];
        for symbol in 0..m as u32 {
            let progressed = interner.progress(residual, symbol);
            let next = interner.canonical(progressed);
            let target = match state_of.get(&next) {
                Some(&t) => t,
                None => {
                    if residuals.len() >= options.max_states {
                        return Err(CompileError::StateBudget {
                            limit: options.max_states,
                        });
                    }
                    let t = residuals.len() as StateId;
                    residuals.push(next);
                    state_of.insert(next, t);
                    queue.push_back(t);
                    t
                }
            };
            debug_assert_eq!(delta.len(), q as usize * m + symbol as usize);
            delta.push(target);
        }
    }
    let accepting: Vec<bool> = residuals.iter().map(|&r| interner.accepting(r)).collect();

    let (initial, accepting, delta) = if options.minimize {
        minimize(0, &accepting, &delta, m)
    } else {
        (0, accepting, delta)
    };
    Ok(Dfa::from_parts(symbols, initial, accepting, delta, cost)
        .expect("progression yields a complete automaton"))
}
