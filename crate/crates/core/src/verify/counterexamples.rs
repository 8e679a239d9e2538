//! The four-node soundness counterexample, the three-choice gap and the
//! subset condition for multi-choice arrivals.

use std::collections::BTreeSet;

use num_traits::Signed;
use serde::Serialize;
use serde_json::json;

use super::{CheckResult, VerificationReport};
use crate::error::{Error, Result};
use crate::fractional::{check_sound, FractionalTrace};
use crate::instance::{gen_example_impossible, gen_three_choice_counterexample, EdgeValues, Instance};
use crate::rational::{format, one, ratio, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetViolation {
    pub arrival: usize,
    pub subset: Vec<usize>,
    #[serde(with = "crate::rational::serde_str")]
    pub lhs: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetConditionReport {
    pub holds: bool,
    pub subsets_checked: usize,
    pub violations: Vec<SubsetViolation>,
}

/// Largest arrival degree accepted by [`subset_condition_check`].
const MAX_SUBSET_DEGREE: usize = 8;

/// Checks `sum_{i in I} x_{i,t} <= 1 - prod_{i in I} x_i^(t)` for every
/// nonempty `I` within each arrival's neighbourhood.
pub fn subset_condition_check(values: &EdgeValues, inst: &Instance) -> Result<SubsetConditionReport> {
    if let Some(&(i, t)) = values.keys().find(|&&(i, t)| !inst.has_edge(i, t)) {
        return Err(Error::TraceRejected(format!("value on non-edge ({i}, {t})")));
    }
    let mut degrees = vec![zero(); inst.n()];
    let mut violations = Vec::new();
    let mut checked = 0;
    for (t, nbrs) in inst.arrivals().iter().enumerate() {
        if nbrs.len() > MAX_SUBSET_DEGREE {
            return Err(Error::TooLarge(format!(
                "arrival {t} has {} neighbours; at most {MAX_SUBSET_DEGREE} are enumerated",
                nbrs.len()
            )));
        }
        let x = |i: usize| values.get(&(i, t)).cloned().unwrap_or_else(zero);
        for mask in 1u32..1 << nbrs.len() {
            let subset: Vec<usize> = (0..nbrs.len())
                .filter(|&b| mask >> b & 1 == 1)
                .map(|b| nbrs[b])
                .collect();
            let lhs: Rational = subset.iter().map(|&i| x(i)).sum();
            let rhs = one() - subset.iter().fold(one(), |acc, &i| acc * &degrees[i]);
            checked += 1;
            if lhs > rhs {
                violations.push(SubsetViolation {
                    arrival: t,
                    subset,
                    lhs,
                    rhs,
                });
            }
        }
        for &i in nbrs {
            degrees[i] += x(i);
        }
    }
    Ok(SubsetConditionReport {
        holds: violations.is_empty(),
        subsets_checked: checked,
        violations,
    })
}

/// Smallest, over couplings of two fair choices `{0,1}` and `{2,3}`, of the
/// largest probability that a given cross pair is matched together. A
/// coupling is `Pr[0,2] = Pr[1,3] = c`, `Pr[0,3] = Pr[1,2] = 1/2 - c`; every
/// grid point `c = j / 64` and both extremes are evaluated.
fn coupling_bound() -> (Rational, Rational) {
    let mut best: Option<(Rational, Rational)> = None;
    for j in 0..=32 {
        let c = ratio(j, 64);
        let other = ratio(1, 2) - &c;
        let worst_pair = c.clone().max(other);
        if best.as_ref().is_none_or(|(_, w)| &worst_pair < w) {
            best = Some((c, worst_pair));
        }
    }
    best.expect("grid is non-empty")
}

/// The four-node assignment that satisfies per-node and per-arrival bounds
/// but cannot be rounded without loss.
pub fn impossibility_demo() -> VerificationReport {
    let (inst, values) = gen_example_impossible();
    let name = "example_impossible";
    let mut checks = Vec::new();

    let tr = FractionalTrace::from_edge_values(&inst, &values).expect("static assignment is feasible");
    let sound = check_sound(&tr);
    let v = sound.violations.first();
    let margin = v.map(|v| v.margin()).unwrap_or_else(zero);
    let mut c = CheckResult::new(
        "soundness_violation",
        name,
        "none",
        v.is_some_and(|v| v.arrival == 2) && margin == ratio(1, 4),
        format(&margin),
    );
    if let Some(v) = v {
        c = c.with_counterexample(json!({
            "arrival": v.arrival,
            "lhs": format(&v.lhs),
            "rhs": format(&v.rhs),
        }));
    }
    checks.push(c);

    let first_two_full = (0..2).all(|t| tr.step(t).delta_sum() == one());
    checks.push(CheckResult::new(
        "first_arrivals_matched_surely",
        name,
        "none",
        first_two_full,
        "0".into(),
    ));

    let (c_star, bound) = coupling_bound();
    checks.push(
        CheckResult::new(
            "coupling_lower_bound",
            name,
            "none",
            bound >= ratio(1, 4),
            format(&bound),
        )
        .with_counterexample(json!({ "best_coupling_c": format(&c_star) })),
    );

    let cond = subset_condition_check(&values, &inst).expect("static instance");
    let full_set_fails = cond
        .violations
        .iter()
        .any(|v| v.arrival == 2 && v.subset == inst.neighbors(2));
    checks.push(CheckResult::new(
        "subset_condition_fails_at_last_arrival",
        name,
        "none",
        full_set_fails,
        cond.violations
            .iter()
            .map(|v| &v.lhs - &v.rhs)
            .max()
            .map(|m| format(&m))
            .unwrap_or_else(|| "0".into()),
    ));
    VerificationReport { checks }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThreeChoiceGap {
    #[serde(with = "crate::rational::serde_str")]
    pub fractional: Rational,
    /// Expected greedy size, identical for every tie-breaking policy.
    #[serde(with = "crate::rational::serde_str")]
    pub greedy: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub gap: Rational,
    pub policies: usize,
    pub subset_condition_holds: bool,
}

/// Every matching size greedy can reach from `matched` at arrival `t`.
fn greedy_sizes(inst: &Instance, t: usize, matched: &mut Vec<bool>, size: usize, out: &mut BTreeSet<usize>) {
    if t == inst.num_arrivals() {
        out.insert(size);
        return;
    }
    let free: Vec<usize> = inst.neighbors(t).iter().copied().filter(|&i| !matched[i]).collect();
    if free.is_empty() {
        greedy_sizes(inst, t + 1, matched, size, out);
        return;
    }
    for i in free {
        matched[i] = true;
        greedy_sizes(inst, t + 1, matched, size + 1, out);
        matched[i] = false;
    }
}

/// Greedy choices over the arrivals shared by every graph.
fn prefix_policies(inst: &Instance, len: usize) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    fn rec(inst: &Instance, t: usize, len: usize, matched: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if t == len {
            out.push(matched.clone());
            return;
        }
        let free: Vec<usize> = inst.neighbors(t).iter().copied().filter(|&i| !matched[i]).collect();
        if free.is_empty() {
            return rec(inst, t + 1, len, matched, out);
        }
        for i in free {
            matched[i] = true;
            rec(inst, t + 1, len, matched, out);
            matched[i] = false;
        }
    }
    rec(inst, 0, len, &mut vec![false; inst.n()], &mut out);
    out
}

/// Fractional value of the three-choice assignment against the exact
/// expected size of greedy, over every tie-breaking policy. Choices on the
/// shared arrival prefix are fixed across graphs; later choices are exhausted per graph.
pub fn three_choice_gap() -> Result<ThreeChoiceGap> {
    let graphs = gen_three_choice_counterexample();
    let fractional: Rational = graphs[0].1.values().sum();
    if graphs.iter().any(|(_, v, _)| v.values().sum::<Rational>() != fractional) {
        return Err(Error::violation(0, "graphs carry different fractional values"));
    }
    let shared = (0..graphs[0].0.num_arrivals())
        .take_while(|&t| graphs.iter().all(|(g, _, _)| g.neighbors(t) == graphs[0].0.neighbors(t)))
        .count();
    let policies = prefix_policies(&graphs[0].0, shared);
    let mut greedy: Option<Rational> = None;
    for policy in &policies {
        let prefix_size = policy.iter().filter(|&&m| m).count();
        let mut expectation = zero();
        for (g, _, p) in &graphs {
            let mut sizes = BTreeSet::new();
            greedy_sizes(g, shared, &mut policy.clone(), prefix_size, &mut sizes);
            if sizes.len() != 1 {
                return Err(Error::violation(shared, "greedy completions differ in size"));
            }
            let size = *sizes.iter().next().unwrap();
            expectation += p * Rational::from_integer(size.into());
        }
        match &greedy {
            None => greedy = Some(expectation),
            Some(g) if g != &expectation => {
                return Err(Error::violation(0, "tie-breaking policies differ in expectation"))
            }
            _ => {}
        }
    }
    let greedy = greedy.unwrap_or_else(zero);
    let subset_condition_holds = graphs
        .iter()
        .map(|(g, v, _)| subset_condition_check(v, g).map(|r| r.holds))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|h| h);
    let gap = &fractional - &greedy;
    if !gap.is_positive() {
        log::warn!("three-choice gap is not positive: {}", format(&gap));
    }
    Ok(ThreeChoiceGap {
        fractional,
        greedy,
        gap,
        policies: policies.len(),
        subset_condition_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{run_fractional, Algorithm};
    use crate::instance::gen_random_instance;

    #[test]
    fn gap_values() {
        let g = three_choice_gap().unwrap();
        assert_eq!(g.greedy, ratio(35, 8));
        assert_eq!(g.fractional, ratio(60533, 13824));
        assert_eq!(g.gap, ratio(53, 13824));
        assert_eq!(g.policies, 8);
        assert!(g.subset_condition_holds);
    }

    #[test]
    fn impossibility() {
        let r = impossibility_demo();
        assert!(r.pass(), "{:?}", r.checks);
        assert_eq!(r.check("soundness_violation").unwrap().worst_dev, "1/4");
        assert_eq!(r.check("coupling_lower_bound").unwrap().worst_dev, "1/4");
    }

    #[test]
    fn sound_traces_satisfy_subset_condition() {
        for algo in [Algorithm::WaterLevel, Algorithm::KLevel(3), Algorithm::VertexWeighted] {
            for seed in 0..10 {
                let inst = gen_random_instance(8, 20, 4, (1, 3), seed).unwrap();
                let tr = run_fractional(algo, &inst).unwrap();
                let r = subset_condition_check(&tr.edge_values(), &inst).unwrap();
                assert!(r.holds, "{algo} seed {seed}: {:?}", r.violations.first());
            }
        }
    }

    #[test]
    fn impossible_assignment_fails_on_full_set() {
        let (inst, values) = gen_example_impossible();
        let r = subset_condition_check(&values, &inst).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].arrival, 2);
        assert_eq!(r.violations[0].subset, vec![0, 2]);
        assert_eq!(&r.violations[0].lhs - &r.violations[0].rhs, ratio(1, 4));
    }
}
