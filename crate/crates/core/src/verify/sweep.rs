//! Exhaustive invariant checks over every subset of offline nodes at every arrival.

use num_traits::{Signed, Zero};
use serde_json::json;

use super::{CheckResult, VerificationReport};
use crate::error::{Error, Result};
use crate::fractional::{check_maximal, check_sound, FractionalTrace};
use crate::rational::{format, one, zero, Rational};
use crate::rounding::{exact_run, DistributionTracker, Engine};

/// Largest node count swept exhaustively.
pub const MAX_SWEEP_NODES: usize = 8;

/// `free[mask] = Pr[every node in mask is free]` for all masks.
fn free_table(tracker: &DistributionTracker, n: usize) -> Vec<Rational> {
    let size = 1usize << n;
    let full = size - 1;
    // Subset sums of the matched-set distribution, read at the complement.
    let mut sub = vec![zero(); size];
    for (&s, p) in tracker.states() {
        sub[s as usize] += p;
    }
    for b in 0..n {
        for mask in 0..size {
            if mask >> b & 1 == 1 {
                let lower = sub[mask ^ 1 << b].clone();
                sub[mask] += lower;
            }
        }
    }
    (0..size).map(|mask| sub[full ^ mask].clone()).collect()
}

struct Worst {
    dev: Rational,
    example: Option<serde_json::Value>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            dev: zero(),
            example: None,
        }
    }

    fn record(&mut self, dev: Rational, example: impl FnOnce() -> serde_json::Value) {
        if dev > self.dev {
            self.dev = dev;
            self.example = Some(example());
        }
    }

    fn into_check(self, name: &str, instance: &str, engine: Engine) -> CheckResult {
        let pass = self.dev.is_zero();
        let c = CheckResult::new(name, instance, &engine.to_string(), pass, format(&self.dev));
        match self.example {
            Some(e) if !pass => c.with_counterexample(e),
            _ => c,
        }
    }
}

fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Runs the exact tracker under `engine` and checks, after every arrival:
/// marginal equality; that free events never regain mass; for the general
/// engine the conditional inequality `Pr[F_i | F_K] <= Pr[F_i | F_J]` for
/// `J ⊆ K`, `i ∉ K`; for the maximal engine product-or-zero, factorisation
/// on independent sets and agreement of the negative-pair state with the tracker.
pub fn sweep_invariants(trace: &FractionalTrace, engine: Engine, instance: &str) -> Result<VerificationReport> {
    let n = trace.n();
    if n > MAX_SWEEP_NODES {
        return Err(Error::TooLarge(format!(
            "{n} nodes; the invariant sweep handles at most {MAX_SWEEP_NODES}"
        )));
    }
    let (pre_name, pre) = match engine {
        Engine::General => ("soundness", check_sound(trace)),
        Engine::Maximal => ("maximality", check_maximal(trace)),
    };
    if let Some(v) = pre.violations.first() {
        let c = CheckResult::new(pre_name, instance, &engine.to_string(), false, format(&v.margin().abs()))
            .with_counterexample(json!({
                "arrival": v.arrival,
                "lhs": format(&v.lhs),
                "rhs": format(&v.rhs),
            }));
        return Ok(VerificationReport { checks: vec![c] });
    }

    let size = 1usize << n;
    let mut degrees = vec![zero(); n];
    let mut prev: Option<Vec<Rational>> = None;
    let mut marginal = Worst::new();
    let mut monotone = Worst::new();
    let mut fkg = Worst::new();
    let mut product = Worst::new();
    let mut factor = Worst::new();
    let mut query = Worst::new();

    exact_run(trace, engine, |t, _, tracker, state| {
        let step = trace.step(t);
        for (k, &i) in step.members.iter().enumerate() {
            degrees[i] = step.after(k);
        }
        let free = free_table(tracker, n);
        let prod = |mask: usize| -> Rational {
            members(mask, n).iter().fold(one(), |acc, &i| acc * (one() - &degrees[i]))
        };

        for (i, x) in degrees.iter().enumerate() {
            let dev = (one() - &free[1 << i] - x).abs();
            marginal.record(dev, || json!({"t": t, "node": i}));
        }
        if let Some(prev) = &prev {
            for mask in 0..size {
                if prev[mask].is_zero() && !free[mask].is_zero() {
                    monotone.record(free[mask].clone(), || json!({"t": t, "set": members(mask, n)}));
                }
            }
        }
        match engine {
            Engine::General => {
                // cond[i][K] = Pr[F_i | F_K] for i not in K and Pr[F_K] > 0.
                let cond = |i: usize, k: usize| -> Option<Rational> {
                    (!free[k].is_zero()).then(|| &free[k | 1 << i] / &free[k])
                };
                for i in 0..n {
                    let cache: Vec<Option<Rational>> = (0..size)
                        .map(|k| if k >> i & 1 == 1 { None } else { cond(i, k) })
                        .collect();
                    for k in 0..size {
                        let Some(ck) = &cache[k] else { continue };
                        // Every J ⊆ K.
                        let mut j = k;
                        loop {
                            if let Some(cj) = &cache[j] {
                                if ck > cj {
                                    fkg.record(ck - cj, || {
                                        json!({"t": t, "i": i, "J": members(j, n), "K": members(k, n)})
                                    });
                                }
                            }
                            if j == 0 {
                                break;
                            }
                            j = (j - 1) & k;
                        }
                    }
                }
            }
            Engine::Maximal => {
                let state = state.expect("maximal runs carry the negative-pair state");
                for mask in 0..size {
                    let p = &free[mask];
                    let q = prod(mask);
                    if !p.is_zero() && p != &q {
                        product.record((p - &q).abs(), || json!({"t": t, "set": members(mask, n)}));
                    }
                    if !p.is_zero() {
                        let mut sub = mask;
                        while sub != 0 {
                            sub = (sub - 1) & mask;
                            if free[sub] != prod(sub) {
                                factor.record((&free[sub] - prod(sub)).abs(), || {
                                    json!({"t": t, "set": members(mask, n), "subset": members(sub, n)})
                                });
                            }
                        }
                    }
                }
                for i in 0..n {
                    for j in i + 1..n {
                        if state.is_negative(i, j) != free[1 << i | 1 << j].is_zero() {
                            query.record(one(), || json!({"t": t, "pair": [i, j]}));
                        }
                    }
                }
            }
        }
        prev = Some(free);
        Ok(())
    })?;

    let mut checks = vec![
        CheckResult::new(pre_name, instance, &engine.to_string(), true, "0".into()),
        marginal.into_check("marginals", instance, engine),
        monotone.into_check("negativity_monotone", instance, engine),
    ];
    match engine {
        Engine::General => checks.push(fkg.into_check("fkg", instance, engine)),
        Engine::Maximal => {
            checks.push(product.into_check("product_or_zero", instance, engine));
            checks.push(factor.into_check("independent_factorization", instance, engine));
            checks.push(query.into_check("negativity_query", instance, engine));
        }
    }
    Ok(VerificationReport { checks })
}
