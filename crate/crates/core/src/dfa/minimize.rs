use std::collections::VecDeque;

use super::StateId;

/// Hopcroft partition refinement on a complete DFA whose states are all
/// reachable. Returns `(initial, accepting, delta)` renumbered in BFS order
/// from the initial state (which becomes 0).
pub(super) fn minimize(
    initial: StateId,
    accepting: &[bool],
    delta: &[StateId],
    num_symbols: usize,
) -> (StateId, Vec<bool>, Vec<StateId>) {
    let n = accepting.len();
    let m = num_symbols;

    // inverse[s][q] = predecessors of q on s, as a CSR table per symbol
    let mut inv_start = vec![0usize; m * (n + 1)];
    for q in 0..n {
        for s in 0..m {
            inv_start[s * (n + 1) + delta[q * m + s] as usize + 1] += 1;
        }
    }
    for s in 0..m {
        let base = s * (n + 1);
        for i in 1..=n {
            inv_start[base + i] += inv_start[base + i - 1];
        }
    }
    let mut inv = vec![0 as StateId; n * m];
    let mut fill = inv_start.clone();
    for q in 0..n {
        for s in 0..m {
            let slot = &mut fill[s * (n + 1) + delta[q * m + s] as usize];
            inv[s * n + *slot] = q as StateId;
            *slot += 1;
        }
    }
    let preds = |s: usize, q: usize| {
        let base = s * (n + 1);
        &inv[s * n + inv_start[base + q]..s * n + inv_start[base + q + 1]]
    };

    let mut block_of: Vec<usize> = Vec::with_capacity(n);
    let mut blocks: Vec<Vec<StateId>> = Vec::new();
    {
        let (acc, rej): (Vec<StateId>, Vec<StateId>) =
            (0..n as StateId).partition(|&q| accepting[q as usize]);
        for part in [acc, rej] {
            if !part.is_empty() {
                blocks.push(part);
            }
        }
        block_of.resize(n, 0);
        for (b, members) in blocks.iter().enumerate() {
            for &q in members {
                block_of[q as usize] = b;
            }
        }
    }

    let mut in_work = vec![false; blocks.len()];
    let mut work: VecDeque<usize> = VecDeque::new();
    // Seeding with the smaller initial block suffices.
    if blocks.len() == 2 {
        let b = if blocks[0].len() <= blocks[1].len() {
            0
        } else {
            1
        };
        work.push_back(b);
        in_work[b] = true;
    }

    let mut marked = vec![false; n];
    let mut hit_count: Vec<usize> = vec![0; blocks.len()];
    while let Some(splitter) = work.pop_front() {
        in_work[splitter] = false;
        let splitter_members = blocks[splitter].clone();
        for s in 0..m {
            let mut touched_states = Vec::new();
            let mut touched_blocks = Vec::new();
            for &q in &splitter_members {
                for &p in preds(s, q as usize) {
                    if !marked[p as usize] {
                        marked[p as usize] = true;
                        touched_states.push(p);
                        let b = block_of[p as usize];
                        if hit_count[b] == 0 {
                            touched_blocks.push(b);
                        }
                        hit_count[b] += 1;
                    }
                }
            }
            for b in touched_blocks {
                let hits = hit_count[b];
                hit_count[b] = 0;
                if hits == blocks[b].len() {
                    continue;
                }
                let (inside, outside): (Vec<StateId>, Vec<StateId>) =
                    blocks[b].iter().partition(|&&q| marked[q as usize]);
                let new_block = blocks.len();
                let (keep, moved) = if inside.len() <= outside.len() {
                    (outside, inside)
                } else {
                    (inside, outside)
                };
                for &q in &moved {
                    block_of[q as usize] = new_block;
                }
                blocks[b] = keep;
                blocks.push(moved);
                hit_count.push(0);
                in_work.push(false);
                // If `b` is queued both halves end up queued; otherwise
                // queueing the smaller half is enough.
                in_work[new_block] = true;
                work.push_back(new_block);
            }
            for q in touched_states {
                marked[q as usize] = false;
            }
        }
    }

    // Renumber blocks in BFS order from the initial block.
    let mut order = vec![usize::MAX; blocks.len()];
    let mut rep = Vec::with_capacity(blocks.len());
    let start = block_of[initial as usize];
    order[start] = 0;
    rep.push(blocks[start][0]);
    let mut head = 0;
    while head < rep.len() {
        let q = rep[head] as usize;
        head += 1;
        for s in 0..m {
            let b = block_of[delta[q * m + s] as usize];
            if order[b] == usize::MAX {
                order[b] = rep.len();
                rep.push(blocks[b][0]);
            }
        }
    }
    let mut new_delta = Vec::with_capacity(rep.len() * m);
    let mut new_accepting = Vec::with_capacity(rep.len());
    for &q in &rep {
        new_accepting.push(accepting[q as usize]);
        for s in 0..m {
            let b = block_of[delta[q as usize * m + s] as usize];
            new_delta.push(order[b] as StateId);
        }
    }
    (0, new_accepting, new_delta)
}
