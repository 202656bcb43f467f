use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Dfa, Distance, StateId};

impl Dfa {
    /// Fills `distance` (multi-source Dijkstra over reversed edges, weighted
    /// by symbol cost) and `reachable` (forward search per state). Symbols
    /// without a cost are skipped by both.
    pub(super) fn annotate(&mut self) {
        let n = self.num_states();
        let m = self.num_symbols();

        let mut preds: Vec<Vec<(StateId, u32)>> = vec![Vec::new(); n];
        for q in 0..n {
            for s in 0..m {
                if let Some(c) = self.cost[s] {
                    let target = self.delta[q * m + s];
                    preds[target as usize].push((q as StateId, c));
                }
            }
        }

        let mut dist = vec![Distance::INFINITE; n];
        let mut heap = BinaryHeap::new();
        for q in 0..n {
            if self.accepting[q] {
                dist[q] = Distance::ZERO;
                heap.push(Reverse((0u32, q as StateId)));
            }
        }
        while let Some(Reverse((d, q))) = heap.pop() {
            if Distance::finite(d) > dist[q as usize] {
                continue;
            }
            for &(p, c) in &preds[q as usize] {
                let candidate = Distance::finite(d).plus(c);
                if candidate < dist[p as usize] {
                    dist[p as usize] = candidate;
                    heap.push(Reverse((candidate.get().unwrap(), p)));
                }
            }
        }
        self.distance = dist;

        let mut reachable = Vec::with_capacity(n);
        let mut seen = vec![usize::MAX; n];
        for start in 0..n {
            let mut stack = vec![start as StateId];
            let mut found = Vec::new();
            seen[start] = start;
            while let Some(q) = stack.pop() {
                found.push(q);
                for s in 0..m {
                    if self.cost[s].is_none() {
                        continue;
                    }
                    let r = self.delta[q as usize * m + s];
                    if seen[r as usize] != start {
                        seen[r as usize] = start;
                        stack.push(r);
                    }
                }
            }
            found.sort_unstable();
            reachable.push(found);
        }
        self.reachable = reachable;
    }
}
