//! Online rounding of two-choice fractional traces into integral matchings.
//!
//! Both engines reduce each arrival to a [`Decision`]: the probability of
//! matching each member when both are free, and when only that member is free.
//! Decisions depend on the trace alone and are computed once per plan.

mod negative;
mod tracker;

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use num_traits::Zero;
use serde::Serialize;

pub use negative::NegativePairState;
pub use tracker::{tracker_update, DistributionTracker, MAX_TRACKED_NODES};

use crate::error::{Error, Result};
use crate::fractional::{check_maximal, check_sound, FractionalTrace, StepRecord};
use crate::instance::{EdgeValues, Matching};
use crate::probprogram::{maximal_closed_form, solve, ProbProgramInput};
use crate::randomness::{CoinRole, CoinSource};
use crate::rational::{one, zero, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Any sound trace; `p_12` comes from the exact tracker.
    General,
    /// Maximal traces, with negative pairs tracked in O(n) per arrival.
    Maximal,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::General => "general",
            Engine::Maximal => "maximal",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Engine::General),
            "maximal" => Ok(Engine::Maximal),
            _ => Err(Error::OutOfRange(format!("unknown engine `{s}`"))),
        }
    }
}

/// Conditional matching rule of one arrival. A `None` node is a dummy that is never free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub t: usize,
    pub nodes: [Option<usize>; 2],
    /// Probability of matching each node when both are free.
    pub both: [Rational; 2],
    /// Probability of matching each node when it is the only free one.
    pub only: [Rational; 2],
}

impl Decision {
    fn idle(t: usize) -> Self {
        Decision {
            t,
            nodes: [None, None],
            both: [zero(), zero()],
            only: [zero(), zero()],
        }
    }

    fn singleton(step: &StepRecord) -> Result<Self> {
        let free = one() - &step.prior[0];
        if free.is_zero() {
            return Err(Error::violation(step.t, "increase on a node at degree 1"));
        }
        Ok(Decision {
            t: step.t,
            nodes: [Some(step.members[0]), None],
            both: [zero(), zero()],
            only: [&step.deltas[0] / free, zero()],
        })
    }

    /// Prob-Program solution for a pair given `p12 = Pr[both free]`.
    pub fn general(step: &StepRecord, p12: &Rational) -> Result<Self> {
        match step.members.len() {
            0 => Ok(Self::idle(step.t)),
            1 => Self::singleton(step),
            2 => {
                let input = ProbProgramInput::new(
                    step.deltas[0].clone(),
                    step.deltas[1].clone(),
                    step.prior[0].clone(),
                    step.prior[1].clone(),
                    p12.clone(),
                );
                let sol = solve(&input).map_err(|e| Error::violation(step.t, e.to_string()))?;
                Ok(Decision {
                    t: step.t,
                    nodes: [Some(step.members[0]), Some(step.members[1])],
                    both: sol.a,
                    only: sol.b,
                })
            }
            m => Err(Error::violation(step.t, format!("{m} members; rounding needs at most 2"))),
        }
    }

    /// Negative pairs match their sole free member with probability
    /// `Δx_i / (1 - x_i)`; independent pairs use the maximal closed form.
    pub fn maximal(step: &StepRecord, negative: bool) -> Result<Self> {
        match step.members.len() {
            0 => Ok(Self::idle(step.t)),
            1 => Self::singleton(step),
            2 if negative => {
                let only = [0, 1].map(|k| &step.deltas[k] / (one() - &step.prior[k]));
                Ok(Decision {
                    t: step.t,
                    nodes: [Some(step.members[0]), Some(step.members[1])],
                    both: [zero(), zero()],
                    only,
                })
            }
            2 => {
                let sol = maximal_closed_form(
                    &step.deltas[0],
                    &step.deltas[1],
                    &step.prior[0],
                    &step.prior[1],
                )
                .map_err(|e| Error::violation(step.t, e.to_string()))?;
                Ok(Decision {
                    t: step.t,
                    nodes: [Some(step.members[0]), Some(step.members[1])],
                    both: sol.a,
                    only: sol.b,
                })
            }
            m => Err(Error::violation(step.t, format!("{m} members; rounding needs at most 2"))),
        }
    }
}

/// Per-arrival decisions for one trace and engine.
#[derive(Debug, Clone)]
pub struct RoundingPlan {
    engine: Engine,
    n: usize,
    decisions: Vec<Decision>,
    ops_per_arrival: Vec<u64>,
}

fn precheck(trace: &FractionalTrace, engine: Engine) -> Result<()> {
    let report = match engine {
        Engine::General => check_sound(trace),
        Engine::Maximal => check_maximal(trace),
    };
    if let Some(v) = report.violations.first() {
        let what = match engine {
            Engine::General => "sound",
            Engine::Maximal => "maximal",
        };
        return Err(Error::TraceRejected(format!(
            "trace is not {what} at arrival {}: {} vs {}",
            v.arrival, v.lhs, v.rhs
        )));
    }
    if trace.max_members() > 2 {
        return Err(Error::TraceRejected("an arrival has more than two members".into()));
    }
    Ok(())
}

impl RoundingPlan {
    /// The general engine needs `n <= MAX_TRACKED_NODES`; the maximal engine has no size limit.
    pub fn new(trace: &FractionalTrace, engine: Engine) -> Result<Self> {
        match engine {
            Engine::General => {
                let mut decisions = Vec::with_capacity(trace.num_arrivals());
                let mut ops_per_arrival = Vec::with_capacity(trace.num_arrivals());
                exact_run(trace, engine, |_, d, tr, _| {
                    decisions.push(d.clone());
                    ops_per_arrival.push(tr.states().len() as u64);
                    Ok(())
                })?;
                Ok(RoundingPlan {
                    engine,
                    n: trace.n(),
                    decisions,
                    ops_per_arrival,
                })
            }
            Engine::Maximal => {
                precheck(trace, engine)?;
                let mut state = NegativePairState::new(trace.n());
                let mut decisions = Vec::with_capacity(trace.num_arrivals());
                let mut ops_per_arrival = Vec::with_capacity(trace.num_arrivals());
                for step in trace.steps() {
                    let before = state.ops();
                    let negative = state.update(step);
                    decisions.push(Decision::maximal(step, negative)?);
                    ops_per_arrival.push(state.ops() - before);
                }
                Ok(RoundingPlan {
                    engine,
                    n: trace.n(),
                    decisions,
                    ops_per_arrival,
                })
            }
        }
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// Work units per arrival: negative-set operations for the maximal engine,
    /// tracker support size for the general one.
    pub fn ops_per_arrival(&self) -> &[u64] {
        &self.ops_per_arrival
    }

    /// One random matching drawn with `source`.
    pub fn sample(&self, source: &mut dyn CoinSource) -> Result<Matching> {
        let mut matched = FixedBitSet::with_capacity(self.n);
        let mut out = Matching::new();
        for d in &self.decisions {
            let free = d.nodes.map(|n| n.is_some_and(|i| !matched.contains(i)));
            let pick = match free {
                [true, true] => match source.categorical(d.t, CoinRole::B, &d.both)? {
                    k @ (0 | 1) => Some(k),
                    _ => None,
                },
                [true, false] | [false, true] => {
                    let k = if free[0] { 0 } else { 1 };
                    source.bernoulli(d.t, CoinRole::A, &d.only[k])?.then_some(k)
                }
                [false, false] => None,
            };
            if let Some(k) = pick {
                let i = d.nodes[k].expect("free slots hold real nodes");
                matched.insert(i);
                out.insert_unchecked(i, d.t);
            }
        }
        Ok(out)
    }
}

/// Algorithm for sound traces with `n <= MAX_TRACKED_NODES`.
pub fn round_general(trace: &FractionalTrace, source: &mut dyn CoinSource) -> Result<Matching> {
    RoundingPlan::new(trace, Engine::General)?.sample(source)
}

/// Algorithm for maximal traces of any size.
pub fn round_maximal(trace: &FractionalTrace, source: &mut dyn CoinSource) -> Result<Matching> {
    RoundingPlan::new(trace, Engine::Maximal)?.sample(source)
}

/// Runs the exact tracker alongside the engine's decisions, calling `observe`
/// after every arrival with the decision, the updated tracker and (for the
/// maximal engine) the negative-pair state. Returns `Pr[(i,t) in M]` per edge.
pub fn exact_run<F>(trace: &FractionalTrace, engine: Engine, mut observe: F) -> Result<EdgeValues>
where
    F: FnMut(usize, &Decision, &DistributionTracker, Option<&NegativePairState>) -> Result<()>,
{
    precheck(trace, engine)?;
    let mut tracker = DistributionTracker::new(trace.n())?;
    let mut state = (engine == Engine::Maximal).then(|| NegativePairState::new(trace.n()));
    let mut out = EdgeValues::new();
    for step in trace.steps() {
        let decision = match (&mut state, step.members.as_slice()) {
            (Some(state), _) => {
                let negative = state.update(step);
                Decision::maximal(step, negative)?
            }
            (None, &[u, v]) => Decision::general(step, &tracker.prob_free(1 << u | 1 << v))?,
            (None, _) => Decision::general(step, &zero())?,
        };
        let probs = tracker_update(&mut tracker, step, &decision)?;
        for (node, p) in decision.nodes.iter().zip(probs) {
            if let Some(i) = node {
                out.insert((*i, step.t), p);
            }
        }
        observe(step.t, &decision, &tracker, state.as_ref())?;
    }
    Ok(out)
}

/// Exact `Pr[(i,t) in M]` for every edge the trace touches.
pub fn exact_marginals(trace: &FractionalTrace, engine: Engine) -> Result<EdgeValues> {
    exact_run(trace, engine, |_, _, _, _| Ok(()))
}
