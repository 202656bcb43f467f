//! Exhaustive constrained MAP and feasibility checks for small instances.

use crate::concept::{Guide, MatchState, OutputId, Step};
use crate::decoder::Viability;
use crate::dfa::Dfa;
use crate::error::OracleError;
use crate::ltlf::{satisfies, Atom, Formula, Trace};
use crate::scorer::Scorer;

pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Lexicographically first sequence of maximal log-likelihood.
    pub best: Option<Vec<OutputId>>,
    /// `-inf` when nothing is feasible.
    pub best_loglik: f64,
    pub feasible_count: u64,
    pub enumerated: u64,
}

impl OracleResult {
    /// Negative log-likelihood of the best sequence; `inf` if none.
    pub fn best_nll(&self) -> f64 {
        -self.best_loglik
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions<'f> {
    pub cap: u128,
    /// Re-checks every sequence's acceptance against the formula semantics.
    pub formula: Option<&'f Formula>,
}

impl Default for OracleOptions<'_> {
    fn default() -> Self {
        OracleOptions {
            cap: DEFAULT_CAP,
            formula: None,
        }
    }
}

/// `d₀ ≤ T`.
pub fn feasible(dfa: &Dfa, horizon: usize) -> bool {
    dfa.distance(dfa.initial()).within(horizon)
}

/// Whether some output sequence of exactly `horizon` outputs is accepted.
pub fn feasible_exact(guide: &Guide<'_>, horizon: usize) -> bool {
    Viability::new(guide, horizon, None).viable(horizon, guide.dfa().initial(), MatchState::EMPTY)
}

struct Search<'a, S: ?Sized> {
    scorer: &'a S,
    guide: &'a Guide<'a>,
    horizon: usize,
    formula: Option<&'a Formula>,
    prefix: Vec<OutputId>,
    result: OracleResult,
    mismatch: Option<Vec<OutputId>>,
}

impl<S: Scorer + ?Sized> Search<'_, S> {
    fn visit(&mut self, state: u32, pending: MatchState, loglik: f64) -> Result<(), OracleError> {
        if self.prefix.len() == self.horizon {
            self.result.enumerated += 1;
            let accepted = self.guide.is_final(state, pending);
            if let Some(f) = self.formula {
                let names = self.guide.table().nu_names(&self.prefix);
                let trace = Trace::one_hot(names.iter().map(|n| Atom::new(n.as_str()).expect("concept names are atoms")));
                if satisfies(&trace, f) != accepted && self.mismatch.is_none() {
                    self.mismatch = Some(self.prefix.clone());
                }
            }
            if accepted {
                self.result.feasible_count += 1;
                if loglik > self.result.best_loglik || self.result.best.is_none() {
                    self.result.best_loglik = loglik;
                    self.result.best = Some(self.prefix.clone());
                }
            }
            return Ok(());
        }
        let row = self.scorer.score(&[&self.prefix])?.remove(0);
        let table = self.guide.table();
        for x in 0..table.vocab_size() as OutputId {
            let (step, next) = table.advance(pending, x);
            let q = match step {
                Step::Pending => state,
                s => self.guide.apply(state, s),
            };
            self.prefix.push(x);
            self.visit(q, next, loglik + row[x as usize])?;
            self.prefix.pop();
        }
        Ok(())
    }
}

/// Enumerates every output sequence of length `horizon` and returns the
/// accepted one of highest log-likelihood. Log-likelihoods are summed left
/// to right, as the decoder does.
pub fn brute_force_map<S: Scorer + ?Sized>(
    scorer: &S,
    guide: &Guide<'_>,
    horizon: usize,
    options: OracleOptions<'_>,
) -> Result<OracleResult, OracleError> {
    let vocab = guide.table().vocab_size() as u128;
    let count = (0..horizon).try_fold(1u128, |acc, _| acc.checked_mul(vocab));
    match count {
        Some(c) if c <= options.cap => {}
        _ => {
            return Err(OracleError::Cap {
                count: count.unwrap_or(u128::MAX),
                cap: options.cap,
            })
        }
    }
    let mut search = Search {
        scorer,
        guide,
        horizon,
        formula: options.formula,
        prefix: Vec::with_capacity(horizon),
        result: OracleResult {
            best: None,
            best_loglik: f64::NEG_INFINITY,
            feasible_count: 0,
            enumerated: 0,
        },
        mismatch: None,
    };
    search.visit(guide.dfa().initial(), MatchState::EMPTY, 0.0)?;
    if let Some(outputs) = search.mismatch {
        return Err(OracleError::Mismatch(outputs));
    }
    Ok(search.result)
}
