use crate::concept::{Guide, MatchState, OutputId, Step};
use crate::dfa::StateId;

/// `viable(r, q, m)`: some continuation of exactly `r` outputs from automaton
/// state `q` with buffer `m` ends in a final configuration. With an end
/// output, emitting it ends the sequence and must leave a final
/// configuration.
#[derive(Debug, Clone)]
pub struct Viability {
    horizon: usize,
    states: usize,
    nodes: usize,
    eos: Option<OutputId>,
    bits: Vec<bool>,
}

impl Viability {
    pub fn new(guide: &Guide<'_>, horizon: usize, eos: Option<OutputId>) -> Self {
        let dfa = guide.dfa();
        let table = guide.table();
        let states = dfa.num_states();
        let nodes = table.num_match_states();
        let vocab = table.vocab_size();
        let configs: Vec<(StateId, MatchState)> = (0..states as StateId)
            .flat_map(|q| (0..nodes).filter_map(move |n| table.match_state_at(n).map(|m| (q, m))))
            .collect();

        let layer = states * nodes;
        let mut bits = vec![false; layer * (horizon + 1)];
        let index = |q: StateId, m: MatchState| q as usize * nodes + m.node();
        for &(q, m) in &configs {
            bits[index(q, m)] = guide.is_final(q, m);
        }
        for r in 1..=horizon {
            let (prev, cur) = bits.split_at_mut(layer * r);
            let prev = &prev[layer * (r - 1)..];
            let cur = &mut cur[..layer];
            for &(q, m) in &configs {
                let mut ok = false;
                for (x, step, next) in table.transitions(m) {
                    let q2 = guide.apply(q, step);
                    ok = if Some(x) == eos {
                        guide.is_final(q2, next)
                    } else {
                        prev[index(q2, next)]
                    };
                    if ok {
                        break;
                    }
                }
                if !ok {
                    let breaking = vocab - table.num_children(m);
                    if breaking > 0 {
                        let q2 = guide.apply(q, Step::NoMatch);
                        let eos_breaks = eos.is_some_and(|e| (e as usize) < vocab && !table.is_child(m, e));
                        if eos_breaks && guide.is_final(q2, MatchState::EMPTY) {
                            ok = true;
                        } else if breaking > usize::from(eos_breaks) {
                            ok = prev[index(q2, MatchState::EMPTY)];
                        }
                    }
                }
                cur[index(q, m)] = ok;
            }
        }
        Viability {
            horizon,
            states,
            nodes,
            eos,
            bits,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn eos(&self) -> Option<OutputId> {
        self.eos
    }

    pub fn viable(&self, remaining: usize, state: StateId, pending: MatchState) -> bool {
        debug_assert!(remaining <= self.horizon && (state as usize) < self.states);
        self.bits[remaining * self.states * self.nodes + state as usize * self.nodes + pending.node()]
    }
}
