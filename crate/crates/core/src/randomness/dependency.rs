//! Counts the coin slots each matched-edge event of a level trace depends on.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractional::{classify_klevel_steps, FractionalTrace, LevelTable, StepKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeDependency {
    pub node: usize,
    pub arrival: usize,
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyReport {
    pub k: usize,
    pub edge_bound: usize,
    pub edges: Vec<EdgeDependency>,
    pub max_edge_slots: usize,
    /// Largest free-status slot count seen at each level `0..=k`.
    pub max_node_slots: Vec<usize>,
}

/// Slot id of `(t, role)`: `2t` for A and `2t + 1` for B.
type Slot = usize;

/// Follows the free-status recursion of the maximal engine over `trace`:
/// random pair steps merge both histories and add the arrival's two slots,
/// shifts hand the partner's history to the raised node, and nodes reaching
/// degree 1 become constant.
pub fn dependency_tracker(trace: &FractionalTrace, table: &LevelTable) -> Result<DependencyReport> {
    let kinds = classify_klevel_steps(trace, table)?;
    let k = table.k();
    let edge_bound = 1usize << (k + 2);
    let node_bound = |level: usize| (1usize << (level + 1)).saturating_sub(2);
    let mut deps: Vec<BTreeSet<Slot>> = vec![BTreeSet::new(); trace.n()];
    let mut edges = Vec::new();
    let mut max_node_slots = vec![0usize; k + 1];
    for (step, kind) in trace.steps().iter().zip(&kinds) {
        let t = step.t;
        let before: Vec<BTreeSet<Slot>> = step.members.iter().map(|&i| deps[i].clone()).collect();
        let after: Vec<BTreeSet<Slot>> = match kind {
            StepKind::Noop => continue,
            StepKind::Deterministic => vec![BTreeSet::new()],
            StepKind::Random => {
                let mut merged: BTreeSet<Slot> = before[0].union(&before[1]).copied().collect();
                merged.insert(2 * t);
                merged.insert(2 * t + 1);
                vec![merged.clone(), merged]
            }
            StepKind::Shift => {
                let low = if step.prior[0] < step.prior[1] { 0 } else { 1 };
                let mut out = vec![BTreeSet::new(), BTreeSet::new()];
                out[low] = before[1 - low].clone();
                out
            }
            StepKind::Unstructured => {
                return Err(Error::StructureViolation {
                    arrival: t,
                    message: "unstructured step".into(),
                })
            }
        };
        for (pos, &i) in step.members.iter().enumerate() {
            let slots = before[pos].union(&after[pos]).count();
            if slots > edge_bound {
                return Err(Error::violation(
                    t,
                    format!("edge ({i}, {t}) depends on {slots} slots > {edge_bound}"),
                ));
            }
            edges.push(EdgeDependency {
                node: i,
                arrival: t,
                slots,
            });
            let level = table.index_of(&step.after(pos)).expect("classified steps use levels");
            let count = after[pos].len();
            if level <= k {
                if count > node_bound(level) {
                    return Err(Error::violation(
                        t,
                        format!("node {i} at level {level} depends on {count} slots"),
                    ));
                }
                max_node_slots[level] = max_node_slots[level].max(count);
            }
            deps[i] = after[pos].clone();
        }
    }
    let max_edge_slots = edges.iter().map(|e| e.slots).max().unwrap_or(0);
    Ok(DependencyReport {
        k,
        edge_bound,
        edges,
        max_edge_slots,
        max_node_slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{run_fractional, Algorithm};
    use crate::instance::{gen_adversarial_waterlevel, gen_random_instance, Instance};

    #[test]
    fn first_random_step_has_two_slots() {
        let inst = Instance::unweighted(2, vec![vec![0, 1]]).unwrap();
        let tr = run_fractional(Algorithm::KLevel(2), &inst).unwrap();
        let rep = dependency_tracker(&tr, &LevelTable::klevel(2).unwrap()).unwrap();
        assert_eq!(rep.edges.len(), 2);
        assert!(rep.edges.iter().all(|e| e.slots == 2));
        assert_eq!(rep.max_node_slots, vec![0, 2, 0]);
    }

    #[test]
    fn shift_inherits_partner_history() {
        let table = LevelTable::two_level();
        // Nodes 0 and 1 go to 1/2 together, then node 2 (fresh) is paired with node 0
        // under heavy weight on node 0 to force a shift.
        let inst = Instance::new(
            vec![crate::rational::int(1), crate::rational::int(1), crate::rational::ratio(1, 6)],
            vec![vec![0, 1], vec![0, 2]],
        )
        .unwrap();
        let tr = run_fractional(Algorithm::VertexWeighted, &inst).unwrap();
        let kinds = classify_klevel_steps(&tr, &table).unwrap();
        assert_eq!(kinds, vec![StepKind::Random, StepKind::Shift]);
        let rep = dependency_tracker(&tr, &table).unwrap();
        let node2 = rep.edges.iter().find(|e| e.node == 2).unwrap();
        assert_eq!(node2.slots, 2);
    }

    #[test]
    fn bounds_hold_on_level_traces() {
        for k in 1..=4 {
            let table = LevelTable::klevel(k).unwrap();
            let inst = gen_adversarial_waterlevel(k.min(4)).unwrap();
            let tr = run_fractional(Algorithm::KLevel(k), &inst).unwrap();
            let rep = dependency_tracker(&tr, &table).unwrap();
            assert!(rep.max_edge_slots <= rep.edge_bound);
            for seed in 0..5 {
                let inst = gen_random_instance(12, 30, 2, (1, 1), seed).unwrap();
                let tr = run_fractional(Algorithm::KLevel(k), &inst).unwrap();
                assert!(dependency_tracker(&tr, &table).is_ok());
            }
        }
    }

    #[test]
    fn water_level_traces_are_rejected() {
        let inst = Instance::unweighted(3, vec![vec![0, 1], vec![0, 2]]).unwrap();
        let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        assert!(dependency_tracker(&tr, &LevelTable::klevel(2).unwrap()).is_err());
    }
}
