use num_traits::{One, Signed, Zero};

use super::{FractionalTrace, LevelTable, StepKind, StepRecord};
use crate::error::{Error, Result};
use crate::rational::{dyadic_exponent, in_unit_interval, one, Rational};

/// One arrival where `lhs` (the increase) and `rhs` (the allowance) disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub arrival: usize,
    pub lhs: Rational,
    pub rhs: Rational,
}

impl Violation {
    pub fn margin(&self) -> Rational {
        &self.lhs - &self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConditionReport {
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn arrivals(&self) -> Vec<usize> {
        self.violations.iter().map(|v| v.arrival).collect()
    }
}

fn allowance(step: &StepRecord) -> Rational {
    one() - step.prior_product()
}

/// `sum Δx_i <= 1 - prod x_i` over `P_t`, for every arrival.
pub fn check_sound(trace: &FractionalTrace) -> ConditionReport {
    let violations = trace
        .steps()
        .iter()
        .filter(|s| !s.is_noop())
        .filter_map(|s| {
            let (lhs, rhs) = (s.delta_sum(), allowance(s));
            (lhs > rhs).then_some(Violation {
                arrival: s.t,
                lhs,
                rhs,
            })
        })
        .collect();
    ConditionReport { violations }
}

/// Soundness with equality whenever `P_t` is non-empty.
pub fn check_maximal(trace: &FractionalTrace) -> ConditionReport {
    let violations = trace
        .steps()
        .iter()
        .filter(|s| !s.is_noop())
        .filter_map(|s| {
            let (lhs, rhs) = (s.delta_sum(), allowance(s));
            (lhs != rhs).then_some(Violation {
                arrival: s.t,
                lhs,
                rhs,
            })
        })
        .collect();
    ConditionReport { violations }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitReport {
    /// Minimal sufficient bits per arrival; `None` when a quantity is not dyadic.
    pub per_arrival: Vec<Option<u32>>,
    pub required: u32,
}

impl BitReport {
    /// Largest per-arrival requirement, or `None` if some arrival is not dyadic.
    pub fn minimal_bits(&self) -> Option<u32> {
        self.per_arrival
            .iter()
            .try_fold(0u32, |acc, b| b.map(|b| acc.max(b)))
    }

    pub fn holds(&self) -> bool {
        self.minimal_bits().is_some_and(|b| b <= self.required)
    }

    pub fn failing_arrivals(&self) -> Vec<usize> {
        self.per_arrival
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_none_or(|b| b > self.required))
            .map(|(t, _)| t)
            .collect()
    }
}

/// Rounding quantities of one step: `Δ_i / (1 - x_i)` and, when both members
/// are below 1, `(1 - x_i - Δ_i) / ((1 - x_1)(1 - x_2))`.
pub(crate) fn rounding_quantities(step: &StepRecord) -> Result<Vec<Rational>> {
    if step.members.len() > 2 {
        return Err(Error::violation(step.t, "more than two members"));
    }
    let mut out = Vec::with_capacity(4);
    for (x, d) in step.prior.iter().zip(&step.deltas) {
        let free = one() - x;
        if free.is_zero() {
            if d.is_positive() {
                return Err(Error::violation(step.t, "positive increase on a node at degree 1"));
            }
            continue;
        }
        out.push(d / &free);
    }
    if step.members.len() == 2 && step.prior.iter().all(|x| x < &one()) {
        let prod = (one() - &step.prior[0]) * (one() - &step.prior[1]);
        for (x, d) in step.prior.iter().zip(&step.deltas) {
            out.push((one() - x - d) / &prod);
        }
    }
    Ok(out)
}

/// Checks that every rounding quantity is `a / 2^bits` with `0 <= a <= 2^bits`.
pub fn check_bbit_precise(trace: &FractionalTrace, bits: u32) -> Result<BitReport> {
    let mut per_arrival = Vec::with_capacity(trace.num_arrivals());
    for step in trace.steps() {
        let qs = rounding_quantities(step)?;
        let need = qs.iter().try_fold(0u32, |acc, q| {
            if !in_unit_interval(q) {
                return None;
            }
            dyadic_exponent(q).map(|e| acc.max(e))
        });
        per_arrival.push(need);
    }
    Ok(BitReport {
        per_arrival,
        required: bits,
    })
}

/// Tags each step as noop, deterministic, random or shift against `table`.
pub fn classify_klevel_steps(trace: &FractionalTrace, table: &LevelTable) -> Result<Vec<StepKind>> {
    trace
        .steps()
        .iter()
        .map(|s| classify_step(s, table))
        .collect()
}

fn classify_step(s: &StepRecord, table: &LevelTable) -> Result<StepKind> {
    let bad = |msg: String| Error::StructureViolation {
        arrival: s.t,
        message: msg,
    };
    for k in 0..s.members.len() {
        for v in [&s.prior[k], &s.after(k)] {
            if table.index_of(v).is_none() {
                return Err(bad(format!("degree {v} of node {} is not a level", s.members[k])));
            }
        }
    }
    match s.members.len() {
        0 => Ok(StepKind::Noop),
        1 if s.after(0).is_one() => Ok(StepKind::Deterministic),
        2 => {
            let (p, a) = (&s.prior, [s.after(0), s.after(1)]);
            let max_prior = p[0].clone().max(p[1].clone());
            if a.iter().all(|v| v > &max_prior) {
                return Ok(StepKind::Random);
            }
            for (lo, hi) in [(0, 1), (1, 0)] {
                if p[lo].is_zero() && p[hi] < one() && a[lo] == p[hi] && a[hi].is_one() {
                    return Ok(StepKind::Shift);
                }
            }
            Err(bad("pair update is neither random nor shift".into()))
        }
        _ => Err(bad(format!(
            "{} members do not form a level step",
            s.members.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{run_fractional, Algorithm};
    use crate::instance::{gen_adversarial_waterlevel, gen_example_impossible, gen_random_instance, Instance};
    use crate::rational::{ratio, zero};

    #[test]
    fn algorithms_are_maximal() {
        for seed in 0..40 {
            let inst = gen_random_instance(7, 10, 4, (1, 9), seed).unwrap();
            for algo in [
                Algorithm::WaterLevel,
                Algorithm::KLevel(2),
                Algorithm::KLevel(3),
                Algorithm::VertexWeighted,
            ] {
                let tr = run_fractional(algo, &inst).unwrap();
                assert!(check_maximal(&tr).holds(), "{algo} seed {seed}");
                assert!(check_sound(&tr).holds());
            }
        }
    }

    #[test]
    fn impossible_example_is_unsound_at_third_arrival() {
        let (inst, values) = gen_example_impossible();
        let tr = FractionalTrace::from_edge_values(&inst, &values).unwrap();
        let rep = check_sound(&tr);
        assert_eq!(rep.arrivals(), vec![2]);
        assert_eq!(rep.violations[0].lhs, one());
        assert_eq!(rep.violations[0].rhs, ratio(3, 4));
        assert_eq!(rep.violations[0].margin(), ratio(1, 4));
    }

    #[test]
    fn zero_trace_is_vacuous() {
        let inst = Instance::unweighted(2, vec![vec![0, 1], vec![]]).unwrap();
        let tr = FractionalTrace::from_edge_values(&inst, &Default::default()).unwrap();
        assert!(check_sound(&tr).holds());
        assert!(check_maximal(&tr).holds());
        assert_eq!(check_bbit_precise(&tr, 0).unwrap().minimal_bits(), Some(0));
        assert_eq!(tr.primal(), &zero());
    }

    #[test]
    fn klevel_bits() {
        for k in 1..=4u32 {
            let inst = gen_adversarial_waterlevel(5).unwrap();
            let tr = run_fractional(Algorithm::KLevel(k), &inst).unwrap();
            let rep = check_bbit_precise(&tr, 1 << (k - 1)).unwrap();
            assert_eq!(rep.minimal_bits(), Some(1 << (k - 1)), "k = {k}");
            let table = LevelTable::klevel(k).unwrap();
            let kinds = classify_klevel_steps(&tr, &table).unwrap();
            for (s, kind) in tr.steps().iter().zip(kinds) {
                assert_eq!(s.kind, kind);
            }
        }
    }

    #[test]
    fn vw_shift_needs_three_bits() {
        let inst = Instance::new(
            vec![ratio(1, 1), ratio(1, 1), ratio(1, 6)],
            vec![vec![0, 1], vec![0, 1], vec![2, 0]],
        )
        .unwrap();
        let tr = run_fractional(Algorithm::VertexWeighted, &inst).unwrap();
        assert_eq!(tr.step(2).kind, StepKind::Shift);
        let rep = check_bbit_precise(&tr, 3).unwrap();
        assert_eq!(rep.per_arrival[2], Some(3));
        assert!(!check_bbit_precise(&tr, 2).unwrap().holds());
    }

    #[test]
    fn classify_examples() {
        let table = LevelTable::klevel(2).unwrap();
        let step = |prior: [(i64, i64); 2], after: [(i64, i64); 2]| StepRecord {
            t: 0,
            members: vec![0, 1],
            prior: prior.iter().map(|&(p, q)| ratio(p, q)).collect(),
            deltas: prior
                .iter()
                .zip(after)
                .map(|(&(p, q), (a, b))| ratio(a, b) - ratio(p, q))
                .collect(),
            kind: StepKind::Unstructured,
        };
        let s = step([(1, 2), (1, 2)], [(7, 8), (7, 8)]);
        assert_eq!(classify_step(&s, &table).unwrap(), StepKind::Random);
        let s = step([(0, 1), (1, 2)], [(1, 2), (1, 1)]);
        assert_eq!(classify_step(&s, &table).unwrap(), StepKind::Shift);
        let s = step([(0, 1), (1, 2)], [(1, 2), (7, 8)]);
        assert!(classify_step(&s, &table).is_err());
    }
}
