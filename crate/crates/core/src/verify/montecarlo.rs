//! Sampled per-edge marginals with deterministic, parallel trial seeding.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractional::FractionalTrace;
use crate::randomness::{trial_seed, SourceFactory};
use crate::rational::{format, to_f64};
use crate::rounding::RoundingPlan;

/// Width of the acceptance band in standard deviations.
pub const SIGMA_BAND: f64 = 4.0;

const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeEstimate {
    pub node: usize,
    pub arrival: usize,
    pub x: String,
    pub mean: f64,
    /// Binomial standard error from the empirical mean.
    pub stderr: f64,
    /// `sqrt(x (1 - x) / trials)`.
    pub sigma: f64,
    pub within_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub master_seed: u64,
    pub rng: String,
    /// Allowed bias on top of the sampling band.
    pub delta: f64,
    pub edges: Vec<EdgeEstimate>,
    pub max_abs_dev: f64,
    pub mean_weight: f64,
    pub pass: bool,
}

/// Runs `trials` independent roundings of `plan`, trial `i` seeded with
/// `trial_seed(master_seed, i)`, and compares edge frequencies with `x`.
/// Edges pass when `|mean - x| <= delta + SIGMA_BAND * sigma`.
pub fn monte_carlo_marginals(
    trace: &FractionalTrace,
    plan: &RoundingPlan,
    factory: &SourceFactory,
    trials: u64,
    master_seed: u64,
    delta: f64,
) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::OutOfRange("need at least one trial".into()));
    }
    let weights: Vec<f64> = trace.weights().iter().map(to_f64).collect();
    let chunks: Vec<u64> = (0..trials.div_ceil(CHUNK)).collect();
    let tallies = chunks
        .par_iter()
        .map(|&c| {
            let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
            let mut weight = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut src = factory.make(trial_seed(master_seed, i))?;
                let m = plan.sample(src.as_mut())?;
                for (node, t) in m.edges() {
                    *counts.entry((node, t)).or_insert(0) += 1;
                    weight += weights[node];
                }
            }
            Ok((counts, weight))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut total_weight = 0.0;
    for (chunk, w) in tallies {
        for (e, c) in chunk {
            *counts.entry(e).or_insert(0) += c;
        }
        total_weight += w;
    }

    let n = trials as f64;
    let mut edges = Vec::new();
    let mut max_abs_dev: f64 = 0.0;
    for step in trace.steps() {
        for (&i, d) in step.members.iter().zip(&step.deltas) {
            let x = to_f64(d);
            let mean = *counts.get(&(i, step.t)).unwrap_or(&0) as f64 / n;
            let sigma = (x * (1.0 - x) / n).sqrt();
            let dev = (mean - x).abs();
            max_abs_dev = max_abs_dev.max(dev);
            edges.push(EdgeEstimate {
                node: i,
                arrival: step.t,
                x: format(d),
                mean,
                stderr: (mean * (1.0 - mean) / n).sqrt(),
                sigma,
                within_band: dev <= delta + SIGMA_BAND * sigma + 1e-12,
            });
        }
    }
    let stray = counts
        .keys()
        .any(|&(i, t)| !trace.step(t).members.contains(&i));
    let pass = !stray && edges.iter().all(|e| e.within_band);
    Ok(MonteCarloReport {
        trials,
        master_seed,
        rng: factory.spec().to_string(),
        delta,
        edges,
        max_abs_dev,
        mean_weight: total_weight / n,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{run_fractional, Algorithm};
    use crate::instance::{gen_adversarial_waterlevel, Instance};
    use crate::randomness::RngSpec;
    use crate::rounding::Engine;

    #[test]
    fn zero_trace_means_are_zero() {
        let inst = Instance::unweighted(2, vec![vec![], vec![]]).unwrap();
        let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        let plan = RoundingPlan::new(&tr, Engine::Maximal).unwrap();
        let f = SourceFactory::new(&RngSpec::Iid, 2, None, None).unwrap();
        let r = monte_carlo_marginals(&tr, &plan, &f, 10, 1, 0.0).unwrap();
        assert!(r.edges.is_empty());
        assert!(r.pass);
        assert_eq!(r.mean_weight, 0.0);
    }

    #[test]
    fn single_trial_gives_indicator_means() {
        let inst = gen_adversarial_waterlevel(1).unwrap();
        let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        let plan = RoundingPlan::new(&tr, Engine::Maximal).unwrap();
        let f = SourceFactory::new(&RngSpec::Iid, 3, None, None).unwrap();
        let r = monte_carlo_marginals(&tr, &plan, &f, 1, 9, 0.0).unwrap();
        assert!(r.edges.iter().all(|e| e.mean == 0.0 || e.mean == 1.0));
        assert!(monte_carlo_marginals(&tr, &plan, &f, 0, 9, 0.0).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let inst = gen_adversarial_waterlevel(2).unwrap();
        let tr = run_fractional(Algorithm::KLevel(2), &inst).unwrap();
        let plan = RoundingPlan::new(&tr, Engine::Maximal).unwrap();
        let f = SourceFactory::new(&RngSpec::Iid, 9, None, None).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| monte_carlo_marginals(&tr, &plan, &f, 1000, 5, 0.0).unwrap());
        let b = monte_carlo_marginals(&tr, &plan, &f, 1000, 5, 0.0).unwrap();
        assert_eq!(a, b);
        assert!(a.pass);
    }
}
