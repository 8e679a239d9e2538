//! Exact joint distribution of the matched set during a rounding run.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::Decision;
use crate::error::{Error, Result};
use crate::fractional::StepRecord;
use crate::rational::{format, one, zero, Rational};

/// Largest number of offline nodes the tracker accepts.
pub const MAX_TRACKED_NODES: usize = 20;

/// Distribution over matched subsets, keyed by bitmask (bit `i` set when node `i` is matched).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionTracker {
    n: usize,
    t: usize,
    states: BTreeMap<u32, Rational>,
}

impl DistributionTracker {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_TRACKED_NODES {
            return Err(Error::TooLarge(format!(
                "{n} offline nodes; the exact tracker handles at most {MAX_TRACKED_NODES}"
            )));
        }
        Ok(DistributionTracker {
            n,
            t: 0,
            states: BTreeMap::from([(0, one())]),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of arrivals processed.
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn states(&self) -> &BTreeMap<u32, Rational> {
        &self.states
    }

    /// `Pr[every node of mask is free]`.
    pub fn prob_free(&self, mask: u32) -> Rational {
        self.states
            .iter()
            .filter(|(&s, _)| s & mask == 0)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn prob_matched(&self, i: usize) -> Rational {
        one() - self.prob_free(1 << i)
    }

    /// Subset-to-probability map with keys such as `"0,2"`.
    pub fn dump(&self) -> BTreeMap<String, String> {
        self.states
            .iter()
            .map(|(&s, p)| {
                let key = (0..self.n)
                    .filter(|&i| s >> i & 1 == 1)
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, format(p))
            })
            .collect()
    }

    /// Splits every state by the decision's conditional matching rule and
    /// returns the probability that each decision slot gets matched.
    pub fn apply(&mut self, d: &Decision) -> Result<[Rational; 2]> {
        let t = self.t;
        let unit = |p: &Rational| !p.is_negative() && p <= &one();
        if !d.both.iter().chain(&d.only).all(unit) || &d.both[0] + &d.both[1] > one() {
            return Err(Error::violation(t, "decision probabilities outside [0, 1]"));
        }
        let bits = d.nodes.map(|n| n.map(|i| 1u32 << i));
        let rest_both = one() - &d.both[0] - &d.both[1];
        let mut matched = [zero(), zero()];
        let mut next: BTreeMap<u32, Rational> = BTreeMap::new();
        let mut add = |s: u32, p: Rational| {
            if !p.is_zero() {
                *next.entry(s).or_insert_with(zero) += p;
            }
        };
        for (&s, p) in &self.states {
            let free = bits.map(|b| b.is_some_and(|b| s & b == 0));
            match free {
                [true, true] => {
                    for k in 0..2 {
                        let q = p * &d.both[k];
                        matched[k] += &q;
                        add(s | bits[k].unwrap(), q);
                    }
                    add(s, p * &rest_both);
                }
                [true, false] | [false, true] => {
                    let k = if free[0] { 0 } else { 1 };
                    let q = p * &d.only[k];
                    matched[k] += &q;
                    add(s | bits[k].unwrap(), q);
                    add(s, p * (one() - &d.only[k]));
                }
                [false, false] => add(s, p.clone()),
            }
        }
        let mass: Rational = next.values().sum();
        if !mass.is_one() {
            return Err(Error::violation(t, format!("tracked mass {} != 1", format(&mass))));
        }
        self.states = next;
        self.t += 1;
        Ok(matched)
    }
}

/// Applies `decision` for `step`, checking that both describe the same nodes.
pub fn tracker_update(
    tracker: &mut DistributionTracker,
    step: &StepRecord,
    decision: &Decision,
) -> Result<[Rational; 2]> {
    let nodes: Vec<usize> = decision.nodes.iter().flatten().copied().collect();
    if nodes != step.members || step.t != tracker.time() {
        return Err(Error::violation(step.t, "decision does not match the step"));
    }
    tracker.apply(decision)
}
