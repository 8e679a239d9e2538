//! Two-choice fractional online algorithms and their traces.

mod dual;
mod export;
mod steps;
mod validate;

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{EdgeValues, Instance};
use crate::rational::{one, pow2_neg, ratio, zero, Rational};

pub use dual::{
    alpha_g, dual_fit_certificate, dual_fit_exact, dual_fit_exponential, g_value,
    hardness_ratio, AlphaMode, Certificate, CertificateSummary, DualFitConfig, DualLedger,
    LevelDuals, StepDual,
};
pub use export::{export_trace_jsonl, import_trace_jsonl, TraceLine};
pub use steps::{klevel_step, vertex_weighted_step, water_level_step, VW_Y1, VW_Y2};
pub use validate::{
    check_bbit_precise, check_maximal, check_sound, classify_klevel_steps, BitReport,
    ConditionReport, Violation,
};

/// Level set `0 = z_0 < z_1 < ... < z_k < z_{k+1} = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    levels: Vec<Rational>,
}

/// Largest `k` accepted by [`LevelTable::klevel`].
pub const MAX_LEVELS: u32 = 16;

impl LevelTable {
    /// `z_i = 1 - 2^(1 - 2^i)` for `i <= k`, then `z_{k+1} = 1`.
    pub fn klevel(k: u32) -> Result<Self> {
        if !(1..=MAX_LEVELS).contains(&k) {
            return Err(Error::OutOfRange(format!(
                "level count {k} not in 1..={MAX_LEVELS}"
            )));
        }
        let mut levels = vec![zero()];
        for _ in 1..=k {
            let z = levels.last().unwrap();
            let next = z + (one() - z * z) / Rational::from_integer(2.into());
            levels.push(next);
        }
        levels.push(one());
        Ok(LevelTable { levels })
    }

    /// The two levels 1/2 and 7/8 used by the vertex-weighted algorithm.
    pub fn two_level() -> Self {
        LevelTable::klevel(2).expect("k = 2 is in range")
    }

    pub fn from_levels(levels: Vec<Rational>) -> Result<Self> {
        let ok = levels.len() >= 2
            && levels[0].is_zero()
            && levels.last().is_some_and(One::is_one)
            && levels.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::OutOfRange(
                "levels must increase strictly from 0 to 1".into(),
            ));
        }
        Ok(LevelTable { levels })
    }

    /// Number of interior levels `k`.
    pub fn k(&self) -> usize {
        self.levels.len() - 2
    }

    pub fn levels(&self) -> &[Rational] {
        &self.levels
    }

    pub fn z(&self, i: usize) -> &Rational {
        &self.levels[i]
    }

    /// Index `i` with `z_i == x`, where `k + 1` stands for degree 1.
    pub fn index_of(&self, x: &Rational) -> Option<usize> {
        self.levels.binary_search(x).ok()
    }
}

/// Closed form `1 - 2^(1 - 2^i)`.
pub fn level_value(i: u32) -> Rational {
    one() - pow2_neg((1u32 << i) - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Noop,
    Deterministic,
    Random,
    Shift,
    /// Produced outside the level algorithms (imported or rescaled traces).
    Unstructured,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StepKind::Noop => "noop",
            StepKind::Deterministic => "deterministic",
            StepKind::Random => "random",
            StepKind::Shift => "shift",
            StepKind::Unstructured => "unstructured",
        };
        f.write_str(s)
    }
}

/// One arrival of a fractional run. `members` lists the nodes with positive
/// increase in increasing index order; `prior` and `deltas` are aligned with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub t: usize,
    pub members: Vec<usize>,
    pub prior: Vec<Rational>,
    pub deltas: Vec<Rational>,
    pub kind: StepKind,
}

impl StepRecord {
    pub fn noop(t: usize) -> Self {
        StepRecord {
            t,
            members: Vec::new(),
            prior: Vec::new(),
            deltas: Vec::new(),
            kind: StepKind::Noop,
        }
    }

    /// Builds a record from `(node, prior, new)` triples, dropping unchanged nodes.
    pub(crate) fn from_updates(
        t: usize,
        updates: &[(usize, Rational, Rational)],
        kind: StepKind,
    ) -> Self {
        let mut changed: Vec<_> = updates.iter().filter(|(_, p, n)| n > p).collect();
        changed.sort_by_key(|(i, _, _)| *i);
        if changed.is_empty() {
            return StepRecord::noop(t);
        }
        StepRecord {
            t,
            members: changed.iter().map(|(i, _, _)| *i).collect(),
            prior: changed.iter().map(|(_, p, _)| p.clone()).collect(),
            deltas: changed.iter().map(|(_, p, n)| n - p).collect(),
            kind,
        }
    }

    pub fn is_noop(&self) -> bool {
        self.members.is_empty()
    }

    pub fn delta_sum(&self) -> Rational {
        self.deltas.iter().sum()
    }

    /// Degree of the `k`-th member after the step.
    pub fn after(&self, k: usize) -> Rational {
        &self.prior[k] + &self.deltas[k]
    }

    /// Product of prior degrees over `P_t` (1 for an empty step).
    pub fn prior_product(&self) -> Rational {
        self.prior.iter().fold(one(), |acc, x| acc * x)
    }
}

/// The fractional algorithms this crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    WaterLevel,
    KLevel(u32),
    VertexWeighted,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::WaterLevel => f.write_str("water"),
            Algorithm::KLevel(k) => write!(f, "klevel:{k}"),
            Algorithm::VertexWeighted => f.write_str("vw2"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "water" => Ok(Algorithm::WaterLevel),
            "vw2" => Ok(Algorithm::VertexWeighted),
            _ => {
                let k = s
                    .strip_prefix("klevel:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| {
                        Error::OutOfRange(format!(
                            "unknown algorithm `{s}` (expected water, klevel:K or vw2)"
                        ))
                    })?;
                LevelTable::klevel(k)?;
                Ok(Algorithm::KLevel(k))
            }
        }
    }
}

impl Algorithm {
    /// Level table when the algorithm is level-based.
    pub fn levels(&self) -> Option<LevelTable> {
        match self {
            Algorithm::WaterLevel => None,
            Algorithm::KLevel(k) => LevelTable::klevel(*k).ok(),
            Algorithm::VertexWeighted => Some(LevelTable::two_level()),
        }
    }

    /// Number of bits needed per coin, `2^(k-1)` for k levels.
    pub fn precision_bits(&self) -> Option<u32> {
        match self {
            Algorithm::WaterLevel => None,
            Algorithm::KLevel(k) => Some(1 << (k - 1)),
            Algorithm::VertexWeighted => Some(3),
        }
    }
}

/// A complete fractional run over an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalTrace {
    weights: Vec<Rational>,
    steps: Vec<StepRecord>,
    degrees: Vec<Rational>,
    primal: Rational,
}

impl FractionalTrace {
    /// Validates `steps` against `inst`: one record per arrival, members are
    /// distinct neighbours with positive increase, priors match the running
    /// degrees, degrees stay at most 1 and each arrival carries total mass at most 1.
    pub fn from_steps(inst: &Instance, steps: Vec<StepRecord>) -> Result<Self> {
        if steps.len() != inst.num_arrivals() {
            return Err(Error::TraceRejected(format!(
                "trace has {} records but the instance has {} arrivals",
                steps.len(),
                inst.num_arrivals()
            )));
        }
        let mut degrees = vec![zero(); inst.n()];
        let mut primal = zero();
        for (t, step) in steps.iter().enumerate() {
            if step.t != t {
                return Err(Error::violation(t, format!("record labelled t = {}", step.t)));
            }
            let len = step.members.len();
            if step.prior.len() != len || step.deltas.len() != len {
                return Err(Error::violation(t, "members, prior and deltas differ in length"));
            }
            if step.members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::violation(t, "members must be distinct and sorted"));
            }
            for (k, &i) in step.members.iter().enumerate() {
                if !inst.has_edge(i, t) {
                    return Err(Error::violation(t, format!("node {i} is not a neighbour")));
                }
                if !step.deltas[k].is_positive() {
                    return Err(Error::violation(t, format!("node {i} has non-positive increase")));
                }
                if step.prior[k] != degrees[i] {
                    return Err(Error::violation(
                        t,
                        format!("prior degree of node {i} does not match the running degree"),
                    ));
                }
                let after = &degrees[i] + &step.deltas[k];
                if after > one() {
                    return Err(Error::violation(t, format!("degree of node {i} exceeds 1")));
                }
                primal += inst.weight(i) * &step.deltas[k];
                degrees[i] = after;
            }
            if step.delta_sum() > one() {
                return Err(Error::violation(t, "arrival carries mass above 1"));
            }
        }
        Ok(FractionalTrace {
            weights: inst.weights().to_vec(),
            steps,
            degrees,
            primal,
        })
    }

    /// Trace from explicit per-edge values; every step is tagged unstructured.
    pub fn from_edge_values(inst: &Instance, values: &EdgeValues) -> Result<Self> {
        if let Some(&(i, t)) = values.keys().find(|&&(i, t)| !inst.has_edge(i, t)) {
            return Err(Error::TraceRejected(format!("value on non-edge ({i}, {t})")));
        }
        let mut degrees = vec![zero(); inst.n()];
        let mut steps = Vec::with_capacity(inst.num_arrivals());
        for t in 0..inst.num_arrivals() {
            let mut members: Vec<usize> = inst
                .neighbors(t)
                .iter()
                .copied()
                .filter(|&i| values.get(&(i, t)).is_some_and(Signed::is_positive))
                .collect();
            members.sort_unstable();
            if members.is_empty() {
                steps.push(StepRecord::noop(t));
                continue;
            }
            let prior: Vec<Rational> = members.iter().map(|&i| degrees[i].clone()).collect();
            let deltas: Vec<Rational> = members.iter().map(|&i| values[&(i, t)].clone()).collect();
            for (&i, d) in members.iter().zip(&deltas) {
                degrees[i] += d;
            }
            steps.push(StepRecord {
                t,
                members,
                prior,
                deltas,
                kind: StepKind::Unstructured,
            });
        }
        Self::from_steps(inst, steps)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn step(&self, t: usize) -> &StepRecord {
        &self.steps[t]
    }

    pub fn num_arrivals(&self) -> usize {
        self.steps.len()
    }

    /// Final degrees `x_i`.
    pub fn degrees(&self) -> &[Rational] {
        &self.degrees
    }

    /// Primal value `sum_i w_i x_i`.
    pub fn primal(&self) -> &Rational {
        &self.primal
    }

    /// Every positive `x_{i,t}`.
    pub fn edge_values(&self) -> EdgeValues {
        let mut out = EdgeValues::new();
        for s in &self.steps {
            for (&i, d) in s.members.iter().zip(&s.deltas) {
                out.insert((i, s.t), d.clone());
            }
        }
        out
    }

    pub fn max_members(&self) -> usize {
        self.steps.iter().map(|s| s.members.len()).max().unwrap_or(0)
    }

    /// Multiplies every increase by `gamma` in `(0, 1]`, recomputing priors.
    pub fn dampen(&self, inst: &Instance, gamma: &Rational) -> Result<Self> {
        if !gamma.is_positive() || gamma > &one() {
            return Err(Error::OutOfRange(format!(
                "dampening factor {gamma} not in (0, 1]"
            )));
        }
        let values = self
            .edge_values()
            .into_iter()
            .map(|(e, v)| (e, v * gamma))
            .collect();
        let mut out = Self::from_edge_values(inst, &values)?;
        for (new, old) in out.steps.iter_mut().zip(&self.steps) {
            if !new.is_noop() {
                new.kind = old.kind;
            }
        }
        Ok(out)
    }
}

pub fn run_fractional(algo: Algorithm, inst: &Instance) -> Result<FractionalTrace> {
    let mut degrees = vec![zero(); inst.n()];
    let mut steps = Vec::with_capacity(inst.num_arrivals());
    let table = algo.levels();
    for t in 0..inst.num_arrivals() {
        let nbrs = inst.neighbors(t);
        let step = match algo {
            Algorithm::WaterLevel => water_level_step(t, nbrs, &degrees),
            Algorithm::KLevel(_) => klevel_step(t, nbrs, &degrees, table.as_ref().unwrap())?,
            Algorithm::VertexWeighted => vertex_weighted_step(t, nbrs, &degrees, inst.weights())?,
        };
        for (&i, d) in step.members.iter().zip(&step.deltas) {
            degrees[i] += d;
        }
        steps.push(step);
    }
    log::debug!("{algo}: {} arrivals processed", steps.len());
    FractionalTrace::from_steps(inst, steps)
}

/// The rescaled trace used to exercise strictly sound (non-maximal) rounding.
pub fn dampened_trace(inst: &Instance, trace: &FractionalTrace, gamma: (i64, i64)) -> Result<FractionalTrace> {
    trace.dampen(inst, &ratio(gamma.0, gamma.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_adversarial_waterlevel;

    #[test]
    fn level_tables() {
        let t = LevelTable::klevel(3).unwrap();
        assert_eq!(
            t.levels(),
            &[zero(), ratio(1, 2), ratio(7, 8), ratio(127, 128), one()]
        );
        for i in 0..=6 {
            assert_eq!(LevelTable::klevel(6).unwrap().z(i as usize), &level_value(i));
        }
        assert_eq!(t.index_of(&ratio(7, 8)), Some(2));
        assert_eq!(t.index_of(&ratio(3, 4)), None);
        assert!(LevelTable::klevel(0).is_err());
    }

    #[test]
    fn algorithm_names() {
        for s in ["water", "klevel:3", "vw2"] {
            assert_eq!(s.parse::<Algorithm>().unwrap().to_string(), s);
        }
        assert!("klevel:0".parse::<Algorithm>().is_err());
        assert!("greedy".parse::<Algorithm>().is_err());
    }

    #[test]
    fn empty_and_single_arrival() {
        let empty = Instance::unweighted(3, vec![]).unwrap();
        for algo in [Algorithm::WaterLevel, Algorithm::KLevel(2), Algorithm::VertexWeighted] {
            assert_eq!(run_fractional(algo, &empty).unwrap().primal(), &zero());
        }
        let single = Instance::unweighted(2, vec![vec![0, 1]]).unwrap();
        let tr = run_fractional(Algorithm::KLevel(2), &single).unwrap();
        assert_eq!(tr.primal(), &one());
        assert_eq!(tr.degrees(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn adversarial_degrees_follow_levels() {
        let k = 4;
        let inst = gen_adversarial_waterlevel(k).unwrap();
        let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        // Round i consists of 3^(k-i-1) 2^i triple arrivals.
        let mut t = 0;
        for i in 0..k {
            for _ in 0..3usize.pow(k - i - 1) * 2usize.pow(i) {
                let s = tr.step(t);
                assert_eq!(s.members.len(), 2);
                for p in &s.prior {
                    assert_eq!(p, &level_value(i));
                }
                for m in 0..2 {
                    assert_eq!(s.after(m), level_value(i + 1));
                }
                t += 1;
            }
        }
        let per_node: Rational = tr.degrees().iter().sum();
        assert_eq!(&per_node, tr.primal());
    }

    #[test]
    fn from_steps_rejects_bad_records() {
        let inst = Instance::unweighted(2, vec![vec![0, 1]]).unwrap();
        let good = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        let mut steps = good.steps().to_vec();
        steps[0].deltas[0] = ratio(3, 2);
        assert!(matches!(
            FractionalTrace::from_steps(&inst, steps),
            Err(Error::InvariantViolation { arrival: 0, .. })
        ));
        let mut steps = good.steps().to_vec();
        steps[0].prior[1] = ratio(1, 4);
        assert!(FractionalTrace::from_steps(&inst, steps).is_err());
        assert!(FractionalTrace::from_steps(&inst, vec![]).is_err());
    }

    #[test]
    fn dampening_scales_values() {
        let inst = Instance::unweighted(2, vec![vec![0, 1], vec![0]]).unwrap();
        let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        let d = dampened_trace(&inst, &tr, (1, 2)).unwrap();
        assert_eq!(d.step(0).deltas, vec![ratio(1, 4), ratio(1, 4)]);
        assert_eq!(d.step(1).prior, vec![ratio(1, 4)]);
        assert_eq!(d.step(1).deltas, vec![ratio(1, 4)]);
    }
}
