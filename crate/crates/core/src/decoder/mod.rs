//! Automaton-guided beam search.
//!
//! Every step scores all live beams in one scorer call, removes outputs
//! after which no accepting completion of the exact remaining length
//! exists, pushes up outputs that move the automaton closer to acceptance,
//! and keeps the global top `k` (beam, output) pairs. Surviving beams are
//! re-ranked by their unmodified log-likelihood at the end.

mod config;
mod viability;

pub use config::{push_up, ramp_push_up, DecodeConfig};
pub use viability::Viability;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::concept::{Guide, MatchState, OutputId};
use crate::dfa::StateId;
use crate::error::DecodeError;
use crate::scorer::Scorer;

const PAD: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    /// Generated outputs, without the prompt.
    pub outputs: Vec<OutputId>,
    /// Accumulated boosted score.
    pub score: f64,
    /// Accumulated raw log-probability.
    pub natural_loglik: f64,
    pub state: StateId,
    pub pending: MatchState,
    /// Ended by the end output.
    pub finished: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub steps: usize,
    pub scorer_calls: usize,
    pub candidates: usize,
    pub pruned: usize,
    pub completed_boosts: usize,
    pub quasi_boosts: usize,
    /// Beam slots left empty because fewer than `k` candidates survived.
    pub empty_slots: usize,
    pub invariant_checks: usize,
}

/// Per-step scores of one beam before the accumulated score is added;
/// pruned outputs are `-inf`. Finished beams have no row.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamRecord {
    pub outputs: Vec<OutputId>,
    pub state: StateId,
    pub alpha: f64,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub remaining: usize,
    pub beams: Vec<BeamRecord>,
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub best: Beam,
    /// Final beams, best first.
    pub beams: Vec<Beam>,
    pub concepts: Vec<String>,
    pub satisfied: bool,
    pub steps: usize,
    pub stats: DecodeStats,
    pub trace: Vec<StepRecord>,
}

/// Serialized decode outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub outputs: Vec<OutputId>,
    pub concepts: Vec<String>,
    #[serde(with = "crate::scorer::log_value")]
    pub natural_loglik: f64,
    pub satisfied: bool,
    pub steps: usize,
}

impl Decoded {
    pub fn result(&self) -> DecodeResult {
        DecodeResult {
            outputs: self.best.outputs.clone(),
            concepts: self.concepts.clone(),
            natural_loglik: self.best.natural_loglik,
            satisfied: self.satisfied,
            steps: self.steps,
        }
    }
}

struct Run<'p> {
    prompt: &'p [OutputId],
    beams: Vec<Beam>,
    stats: DecodeStats,
    trace: Vec<StepRecord>,
}

fn candidate_order(a: &(f64, u32, u32), b: &(f64, u32, u32)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.cmp(&b.2))
}

fn start_config(
    guide: &Guide<'_>,
    prompt: &[OutputId],
    cfg: &DecodeConfig,
) -> Result<(StateId, MatchState), DecodeError> {
    if cfg.prompt_in_scope {
        Ok(guide.run_from(guide.dfa().initial(), prompt)?)
    } else {
        Ok((guide.dfa().initial(), MatchState::EMPTY))
    }
}

impl<'p> Run<'p> {
    fn start(
        guide: &Guide<'_>,
        viability: &Viability,
        prompt: &'p [OutputId],
        cfg: &DecodeConfig,
    ) -> Result<Self, DecodeError> {
        let (state, pending) = start_config(guide, prompt, cfg)?;
        let d0 = guide.effective_distance(state, pending);
        if !d0.within(cfg.horizon) {
            return Err(DecodeError::Infeasible {
                horizon: cfg.horizon,
                distance: d0.to_string(),
            });
        }
        if !viability.viable(cfg.horizon, state, pending) {
            return Err(DecodeError::NoExactLength {
                horizon: cfg.horizon,
                distance: d0.to_string(),
            });
        }
        Ok(Run {
            prompt,
            beams: vec![Beam {
                outputs: Vec::new(),
                score: 0.0,
                natural_loglik: 0.0,
                state,
                pending,
                finished: false,
            }],
            stats: DecodeStats::default(),
            trace: Vec::new(),
        })
    }

    fn live(&self) -> impl Iterator<Item = &Beam> {
        self.beams.iter().filter(|b| !b.finished)
    }

    fn step(
        &mut self,
        guide: &Guide<'_>,
        viability: &Viability,
        cfg: &DecodeConfig,
        t: usize,
        rows: &[Vec<f64>],
    ) -> Result<(), DecodeError> {
        let dfa = guide.dfa();
        let table = guide.table();
        let vocab = table.vocab_size() as u32;
        let remaining = cfg.horizon - t;
        self.stats.steps += 1;
        if !rows.is_empty() {
            self.stats.scorer_calls += 1;
        }

        let mut row_of = vec![usize::MAX; self.beams.len()];
        let mut candidates: Vec<(f64, u32, u32)> = Vec::new();
        let mut scratch: Vec<(u32, f64, u8)> = Vec::new();
        let mut records = Vec::new();
        let mut next_row = 0;
        for (i, beam) in self.beams.iter().enumerate() {
            if beam.finished {
                candidates.push((beam.score, i as u32, PAD));
                continue;
            }
            row_of[i] = next_row;
            let row = &rows[next_row];
            next_row += 1;

            let d = dfa.distance(beam.state);
            let alpha = ramp_push_up(cfg.alpha_min, d, remaining, cfg.gamma);
            scratch.clear();
            let mut row_max = f64::NEG_INFINITY;
            for x in 0..vocab {
                let (step, pending) = table.advance(beam.pending, x);
                let q = guide.apply(beam.state, step);
                let ok = if Some(x) == cfg.eos {
                    guide.is_final(q, pending)
                } else {
                    viability.viable(remaining - 1, q, pending)
                };
                if !ok {
                    self.stats.pruned += 1;
                    continue;
                }
                let z = row[x as usize];
                row_max = row_max.max(z);
                let kind = if dfa.distance(q) < d {
                    2
                } else if guide
                    .best_quasi_next_state(beam.state, x, beam.pending)
                    .is_some_and(|q2| dfa.distance(q2) < d)
                {
                    1
                } else {
                    0
                };
                scratch.push((x, z, kind));
            }

            let mut scores = if cfg.trace {
                vec![f64::NEG_INFINITY; vocab as usize]
            } else {
                Vec::new()
            };
            for &(x, z, kind) in &scratch {
                let boosted = if kind > 0 && row_max > f64::NEG_INFINITY {
                    if kind == 2 {
                        self.stats.completed_boosts += 1;
                    } else {
                        self.stats.quasi_boosts += 1;
                    }
                    push_up(z, row_max, alpha, cfg.epsilon, f64::from(kind))
                } else {
                    z
                };
                if cfg.trace {
                    scores[x as usize] = boosted;
                }
                candidates.push((beam.score + boosted, i as u32, x));
            }
            if cfg.trace {
                records.push(BeamRecord {
                    outputs: beam.outputs.clone(),
                    state: beam.state,
                    alpha,
                    scores,
                });
            }
        }
        if cfg.trace {
            self.trace.push(StepRecord {
                step: t,
                remaining,
                beams: records,
            });
        }
        self.stats.candidates += candidates.len();
        if candidates.is_empty() {
            return Err(DecodeError::Internal(format!(
                "no viable candidate at step {t}"
            )));
        }

        let k = cfg.beams.min(candidates.len());
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, candidate_order);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(candidate_order);
        self.stats.empty_slots += cfg.beams - k;

        let mut next = Vec::with_capacity(k);
        for (score, i, x) in candidates {
            let parent = &self.beams[i as usize];
            if x == PAD {
                next.push(Beam {
                    score,
                    ..parent.clone()
                });
                continue;
            }
            let (step, pending) = table.advance(parent.pending, x);
            let mut outputs = Vec::with_capacity(parent.outputs.len() + 1);
            outputs.extend_from_slice(&parent.outputs);
            outputs.push(x);
            next.push(Beam {
                outputs,
                score,
                natural_loglik: parent.natural_loglik + rows[row_of[i as usize]][x as usize],
                state: guide.apply(parent.state, step),
                pending,
                finished: Some(x) == cfg.eos,
            });
        }

        let left = remaining - 1;
        for beam in &next {
            self.stats.invariant_checks += 1;
            let holds = if beam.finished {
                guide.is_final(beam.state, beam.pending)
            } else {
                viability.viable(left, beam.state, beam.pending)
                    && guide.effective_distance(beam.state, beam.pending).within(left)
            };
            if !holds {
                return Err(DecodeError::Internal(format!(
                    "beam {:?} cannot reach acceptance in the {left} remaining steps",
                    beam.outputs
                )));
            }
        }
        self.beams = next;
        Ok(())
    }

    fn finish(mut self, guide: &Guide<'_>, cfg: &DecodeConfig) -> Result<Decoded, DecodeError> {
        self.beams.sort_by(|a, b| {
            b.natural_loglik
                .total_cmp(&a.natural_loglik)
                .then(b.score.total_cmp(&a.score))
                .then_with(|| a.outputs.cmp(&b.outputs))
        });
        let best = self.beams[0].clone();
        let satisfied = guide.is_final(best.state, best.pending);
        if !satisfied {
            return Err(DecodeError::Internal(
                "best beam does not satisfy the constraint".into(),
            ));
        }
        let concepts = if cfg.prompt_in_scope {
            let mut all = self.prompt.to_vec();
            all.extend_from_slice(&best.outputs);
            guide.table().nu_names(&all)
        } else {
            guide.table().nu_names(&best.outputs)
        };
        Ok(Decoded {
            best,
            beams: self.beams,
            concepts,
            satisfied,
            steps: cfg.horizon,
            stats: self.stats,
            trace: self.trace,
        })
    }
}

fn check_inputs<S: Scorer + ?Sized>(
    scorer: &S,
    guide: &Guide<'_>,
    cfg: &DecodeConfig,
) -> Result<(), DecodeError> {
    cfg.validate()?;
    let vocab = guide.table().vocab_size();
    if scorer.vocab_size() != vocab {
        return Err(DecodeError::Config(format!(
            "scorer vocabulary {} differs from the concept table's {vocab}",
            scorer.vocab_size()
        )));
    }
    if cfg.eos.is_some_and(|e| e as usize >= vocab) {
        return Err(DecodeError::Config("end output outside the vocabulary".into()));
    }
    Ok(())
}

/// Decodes one prompt.
pub fn decode<S: Scorer + ?Sized>(
    scorer: &S,
    guide: &Guide<'_>,
    prompt: &[OutputId],
    cfg: &DecodeConfig,
) -> Result<Decoded, DecodeError> {
    check_inputs(scorer, guide, cfg)?;
    let viability = Viability::new(guide, cfg.horizon, cfg.eos);
    decode_with(scorer, guide, &viability, &[prompt], cfg).map(|mut v| v.remove(0))
}

/// Decodes several prompts in lockstep, one scorer call per step for all of
/// their live beams.
pub fn decode_batch<S: Scorer + ?Sized>(
    scorer: &S,
    guide: &Guide<'_>,
    prompts: &[&[OutputId]],
    cfg: &DecodeConfig,
) -> Result<Vec<Decoded>, DecodeError> {
    check_inputs(scorer, guide, cfg)?;
    let viability = Viability::new(guide, cfg.horizon, cfg.eos);
    decode_with(scorer, guide, &viability, prompts, cfg)
}

/// Like [`decode_batch`] with a precomputed viability table, which must
/// match the horizon and end output of `cfg`.
pub fn decode_with<S: Scorer + ?Sized>(
    scorer: &S,
    guide: &Guide<'_>,
    viability: &Viability,
    prompts: &[&[OutputId]],
    cfg: &DecodeConfig,
) -> Result<Vec<Decoded>, DecodeError> {
    check_inputs(scorer, guide, cfg)?;
    if viability.horizon() != cfg.horizon || viability.eos() != cfg.eos {
        return Err(DecodeError::Config(
            "viability table was built for another horizon or end output".into(),
        ));
    }
    let mut runs = prompts
        .iter()
        .map(|p| Run::start(guide, viability, p, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let vocab = guide.table().vocab_size();

    for t in 0..cfg.horizon {
        let mut prefixes: Vec<Vec<OutputId>> = Vec::new();
        let mut spans = Vec::with_capacity(runs.len());
        for run in &runs {
            let start = prefixes.len();
            for beam in run.live() {
                let mut p = Vec::with_capacity(run.prompt.len() + beam.outputs.len());
                p.extend_from_slice(run.prompt);
                p.extend_from_slice(&beam.outputs);
                prefixes.push(p);
            }
            spans.push(start..prefixes.len());
        }
        let rows = if prefixes.is_empty() {
            Vec::new()
        } else {
            let refs: Vec<&[OutputId]> = prefixes.iter().map(Vec::as_slice).collect();
            scorer.score(&refs)?
        };
        if rows.len() != prefixes.len() || rows.iter().any(|r| r.len() != vocab) {
            return Err(DecodeError::Internal(format!(
                "scorer returned a malformed batch at step {t}"
            )));
        }
        for (run, span) in runs.iter_mut().zip(spans) {
            run.step(guide, viability, cfg, t, &rows[span])?;
        }
    }
    runs.into_iter().map(|r| r.finish(guide, cfg)).collect()
}
