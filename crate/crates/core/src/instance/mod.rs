//! Online bipartite matching instances.
//!
//! Offline nodes `0..n` carry strictly positive exact weights; arrivals come
//! in a fixed order, each with a list of distinct offline neighbours.

mod format;
mod generators;
mod opt;

use std::collections::BTreeSet;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::rational::{one, Rational};

pub use format::{parse_instance, serialize_instance};
pub use generators::{
    gen_adversarial_waterlevel, gen_example_impossible, gen_random_instance,
    gen_three_choice_counterexample, EdgeValues, ADVERSARIAL_MAX_ROUNDS,
};
pub use opt::{exhaustive_max_weight, max_weight_matching};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    weights: Vec<Rational>,
    arrivals: Vec<Vec<usize>>,
}

impl Instance {
    pub fn new(weights: Vec<Rational>, arrivals: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_positive()) {
            return Err(Error::InvalidInstance(format!(
                "weight of node {i} is not strictly positive"
            )));
        }
        let n = weights.len();
        for (t, nbrs) in arrivals.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &i in nbrs {
                if i >= n {
                    return Err(Error::InvalidInstance(format!(
                        "arrival {t} references node {i}, but n = {n}"
                    )));
                }
                if !seen.insert(i) {
                    return Err(Error::InvalidInstance(format!(
                        "arrival {t} lists node {i} twice"
                    )));
                }
            }
        }
        Ok(Instance { weights, arrivals })
    }

    /// Instance with all weights equal to one.
    pub fn unweighted(n: usize, arrivals: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(vec![one(); n], arrivals)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn num_arrivals(&self) -> usize {
        self.arrivals.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Rational {
        &self.weights[i]
    }

    pub fn arrivals(&self) -> &[Vec<usize>] {
        &self.arrivals
    }

    pub fn neighbors(&self, t: usize) -> &[usize] {
        &self.arrivals[t]
    }

    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|w| *w == one())
    }

    pub fn num_edges(&self) -> usize {
        self.arrivals.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, t: usize) -> bool {
        self.arrivals.get(t).is_some_and(|nb| nb.contains(&i))
    }

    /// Adjacency from the offline side: for each node, the arrivals it neighbours.
    pub fn offline_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for (t, nbrs) in self.arrivals.iter().enumerate() {
            for &i in nbrs {
                adj[i].push(t);
            }
        }
        adj
    }
}

/// A set of `(offline node, arrival)` edges with degree at most one on both sides.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    edges: BTreeSet<(usize, usize)>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = Matching::new();
        for (i, t) in edges {
            m.insert(i, t)?;
        }
        Ok(m)
    }

    pub fn insert(&mut self, node: usize, arrival: usize) -> Result<()> {
        if self.edges.iter().any(|&(i, t)| i == node || t == arrival) {
            return Err(Error::InvalidInstance(format!(
                "edge ({node}, {arrival}) would give a node degree two"
            )));
        }
        self.edges.insert((node, arrival));
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, node: usize, arrival: usize) {
        self.edges.insert((node, arrival));
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, node: usize, arrival: usize) -> bool {
        self.edges.contains(&(node, arrival))
    }

    pub fn weight(&self, inst: &Instance) -> Rational {
        self.edges.iter().map(|&(i, _)| inst.weight(i).clone()).sum()
    }

    /// Checks that every edge exists in `inst`.
    pub fn validate_against(&self, inst: &Instance) -> Result<()> {
        match self.edges.iter().find(|&&(i, t)| !inst.has_edge(i, t)) {
            Some(&(i, t)) => Err(Error::InvalidInstance(format!(
                "matched pair ({i}, {t}) is not an edge"
            ))),
            None => Ok(()),
        }
    }

    /// JSON list of `[offline, arrival]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.edges
                .iter()
                .map(|&(i, t)| serde_json::json!([i, t]))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn rejects_bad_instances() {
        assert!(Instance::new(vec![int(1), int(0)], vec![]).is_err());
        assert!(Instance::new(vec![int(1)], vec![vec![1]]).is_err());
        assert!(Instance::new(vec![int(1), int(2)], vec![vec![1, 1]]).is_err());
        assert!(Instance::new(vec![ratio(1, 2)], vec![vec![0], vec![]]).is_ok());
    }

    #[test]
    fn matching_degree_bound() {
        let mut m = Matching::new();
        m.insert(0, 0).unwrap();
        assert!(m.insert(0, 1).is_err());
        assert!(m.insert(1, 0).is_err());
        m.insert(1, 1).unwrap();
        assert_eq!(m.to_json().to_string(), "[[0,0],[1,1]]");
    }
}
