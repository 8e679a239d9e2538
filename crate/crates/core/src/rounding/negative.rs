//! Strictly negative pairs under the maximal engine, maintained in O(n) per arrival.

use fixedbitset::FixedBitSet;
use num_traits::One;

use crate::fractional::StepRecord;

/// For each node `i`, the set `S_i` of partners `j` with `Pr[i and j both free] = 0`,
/// plus the nodes already at degree 1.
#[derive(Debug, Clone)]
pub struct NegativePairState {
    n: usize,
    sets: Vec<FixedBitSet>,
    full: FixedBitSet,
    ops: u64,
}

impl NegativePairState {
    pub fn new(n: usize) -> Self {
        NegativePairState {
            n,
            sets: vec![FixedBitSet::new(); n],
            full: FixedBitSet::with_capacity(n),
            ops: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Work units spent so far (bitset words touched plus members visited).
    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn is_full(&self, i: usize) -> bool {
        self.full.contains(i)
    }

    pub fn partners(&self, i: usize) -> Vec<usize> {
        self.sets[i].ones().collect()
    }

    /// Negative iff either node is at degree 1 or `j` is in `S_i`.
    pub fn is_negative(&self, i: usize, j: usize) -> bool {
        self.full.contains(i) || self.full.contains(j) || self.sets[i].contains(j)
    }

    fn words(&self, i: usize) -> u64 {
        self.sets[i].len().div_ceil(64) as u64
    }

    fn insert(&mut self, i: usize, j: usize) {
        if self.sets[i].len() <= j {
            self.sets[i].grow(self.n);
        }
        self.sets[i].insert(j);
    }

    /// Node `u` reached degree 1: it leaves every set.
    fn retire(&mut self, u: usize) {
        let members: Vec<usize> = self.sets[u].ones().collect();
        self.ops += members.len() as u64 + self.words(u);
        for j in members {
            self.sets[j].set(u, false);
        }
        self.sets[u].clear();
        self.full.insert(u);
    }

    /// Updates the sets for `step` and returns whether its pair was negative
    /// beforehand (singletons pair with an always-matched dummy).
    pub fn update(&mut self, step: &StepRecord) -> bool {
        self.ops += 1;
        let negative = match step.members.as_slice() {
            [] => return false,
            [_] => true,
            &[u, v] => {
                let negative = self.is_negative(u, v);
                if !negative {
                    let su = self.sets[u].clone();
                    let sv = self.sets[v].clone();
                    self.ops += 2 * (self.words(u) + self.words(v)) + (su.count_ones(..) + sv.count_ones(..)) as u64;
                    for i in su.ones() {
                        self.insert(i, v);
                    }
                    for i in sv.ones() {
                        self.insert(i, u);
                    }
                    self.sets[u].union_with(&sv);
                    self.sets[v].union_with(&su);
                    self.insert(u, v);
                    self.insert(v, u);
                }
                negative
            }
            _ => unreachable!("engines reject steps with more than two members"),
        };
        for (k, &i) in step.members.iter().enumerate() {
            if step.after(k).is_one() {
                self.retire(i);
            }
        }
        negative
    }
}
