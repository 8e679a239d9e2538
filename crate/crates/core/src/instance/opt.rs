//! Offline optimum for vertex-weighted bipartite matching.
//!
//! Nodes are added greedily by decreasing weight, each with an augmenting-path search.

use std::collections::VecDeque;

use super::{Instance, Matching};
use crate::rational::{zero, Rational};

pub fn max_weight_matching(inst: &Instance) -> (Rational, Matching) {
    let adj = inst.offline_adjacency();
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| inst.weight(b).cmp(inst.weight(a)).then(a.cmp(&b)));

    let mut node_match: Vec<Option<usize>> = vec![None; inst.n()];
    let mut arrival_match: Vec<Option<usize>> = vec![None; inst.num_arrivals()];
    let mut visited = vec![usize::MAX; inst.num_arrivals()];
    let mut parent = vec![0usize; inst.num_arrivals()];

    for (round, &root) in order.iter().enumerate() {
        let mut queue = VecDeque::from([root]);
        let mut free_end = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for &t in &adj[u] {
                if visited[t] == round {
                    continue;
                }
                visited[t] = round;
                parent[t] = u;
                match arrival_match[t] {
                    None => {
                        free_end = Some(t);
                        break 'bfs;
                    }
                    Some(v) => queue.push_back(v),
                }
            }
        }
        let Some(mut t) = free_end else { continue };
        loop {
            let u = parent[t];
            let prev = node_match[u];
            node_match[u] = Some(t);
            arrival_match[t] = Some(u);
            match prev {
                Some(p) if u != root => t = p,
                _ => break,
            }
        }
    }

    let mut m = Matching::new();
    for (i, t) in node_match.iter().enumerate() {
        if let Some(t) = t {
            m.insert_unchecked(i, *t);
        }
    }
    (m.weight(inst), m)
}

/// Brute force over all matchings; only for tiny instances.
pub fn exhaustive_max_weight(inst: &Instance) -> Rational {
    fn go(inst: &Instance, t: usize, used: &mut Vec<bool>) -> Rational {
        if t == inst.num_arrivals() {
            return zero();
        }
        let mut best = go(inst, t + 1, used);
        for &i in inst.neighbors(t) {
            if !used[i] {
                used[i] = true;
                let v = inst.weight(i) + go(inst, t + 1, used);
                used[i] = false;
                if v > best {
                    best = v;
                }
            }
        }
        best
    }
    go(inst, 0, &mut vec![false; inst.n()])
}
