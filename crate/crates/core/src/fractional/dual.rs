//! Dual fitting certificates and the analytic ratio formulas.

use num_traits::{One, Signed, Zero};

use super::steps::{two_smallest, vw_select};
use super::{level_value, FractionalTrace};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::{one, ratio, to_f64, zero, Rational};

/// Dual values attached to the levels `1/2` and `7/8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDuals {
    pub y1: Rational,
    pub y2: Rational,
    /// Use the weighted online-dual rule (max of slack terms) instead of `1 - y(x_2)`.
    pub weighted: bool,
}

impl LevelDuals {
    /// `y(1/2) = 17/38`, `y(7/8) = 67/76`.
    pub fn two_level_unweighted() -> Self {
        LevelDuals {
            y1: ratio(17, 38),
            y2: ratio(67, 76),
            weighted: false,
        }
    }

    /// `y(1/2) = 5/11`, `y(7/8) = 79/88`.
    pub fn vertex_weighted() -> Self {
        LevelDuals {
            y1: ratio(5, 11),
            y2: ratio(79, 88),
            weighted: true,
        }
    }

    fn y(&self, x: &Rational) -> Option<Rational> {
        if x.is_zero() {
            Some(zero())
        } else if x.is_one() {
            Some(one())
        } else if x == &ratio(1, 2) {
            Some(self.y1.clone())
        } else if x == &ratio(7, 8) {
            Some(self.y2.clone())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualFitConfig {
    /// `g(x) = (a^x - 1) / (a - 1)`.
    Exponential { base: f64 },
    Levels(LevelDuals),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDual<V> {
    pub dp: V,
    pub dd: V,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualLedger<V> {
    pub node_duals: Vec<V>,
    pub arrival_duals: Vec<V>,
    pub steps: Vec<StepDual<V>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<V> {
    pub ledger: DualLedger<V>,
    /// Minimum of `ΔP / ΔD` over steps with `ΔD > 0`.
    pub worst_ratio: Option<V>,
    pub worst_step: Option<usize>,
}

impl<V: Clone + std::iter::Sum> Certificate<V> {
    pub fn dual_total(&self) -> V {
        self.ledger
            .node_duals
            .iter()
            .chain(&self.ledger.arrival_duals)
            .cloned()
            .sum()
    }
}

/// Floating summary of either certificate flavour.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSummary {
    pub worst_ratio: Option<f64>,
    pub worst_step: Option<usize>,
    pub exact_worst: Option<Rational>,
    pub dual_total: f64,
}

fn require_unweighted(inst: &Instance) -> Result<()> {
    if inst.is_unweighted() {
        Ok(())
    } else {
        Err(Error::OutOfRange(
            "this dual fitting applies to unit weights only".into(),
        ))
    }
}

/// Exact certificate with constant level duals.
pub fn dual_fit_exact(
    inst: &Instance,
    trace: &FractionalTrace,
    cfg: &LevelDuals,
) -> Result<Certificate<Rational>> {
    if !cfg.weighted {
        require_unweighted(inst)?;
    }
    let y_of = |x: &Rational, t: usize| {
        cfg.y(x)
            .ok_or_else(|| Error::violation(t, format!("degree {x} has no level dual")))
    };
    let w = inst.weights();
    let mut degrees = vec![zero(); inst.n()];
    let mut node_duals = vec![zero(); inst.n()];
    let mut arrival_duals = Vec::with_capacity(trace.num_arrivals());
    let mut steps = Vec::with_capacity(trace.num_arrivals());
    let mut worst: Option<(Rational, usize)> = None;

    for (t, step) in trace.steps().iter().enumerate() {
        let nbrs = inst.neighbors(t);
        let after = |i: usize| match step.members.iter().position(|&m| m == i) {
            Some(k) => step.after(k),
            None => degrees[i].clone(),
        };
        let yt = if cfg.weighted {
            let slots = vw_select(nbrs, &degrees, w);
            let slack = |wi: &Rational, x: &Rational| -> Result<Rational> {
                Ok(wi * (one() - y_of(x, t)?))
            };
            let mut best = slack(&slots[0].w, &slots[0].x)?.min(slack(&slots[1].w, &slots[1].x)?);
            for s in &slots {
                let x_new = s.node.map_or_else(one, &after);
                best = best.max(slack(&s.w, &x_new)?);
            }
            best
        } else {
            let slots = two_smallest(nbrs, &degrees);
            one() - y_of(&slots[1].x, t)?
        };

        let mut dp = zero();
        let mut dd = yt.clone();
        for (k, &i) in step.members.iter().enumerate() {
            let new_y = &w[i] * y_of(&step.after(k), t)?;
            dd += &new_y - &node_duals[i];
            dp += &w[i] * &step.deltas[k];
            node_duals[i] = new_y;
            degrees[i] = step.after(k);
        }
        for &i in nbrs {
            if &node_duals[i] + &yt < w[i] {
                return Err(Error::DualInfeasible { node: i, arrival: t });
            }
        }
        if dd.is_positive() {
            let r = &dp / &dd;
            if worst.as_ref().is_none_or(|(best, _)| &r < best) {
                worst = Some((r, t));
            }
        }
        arrival_duals.push(yt);
        steps.push(StepDual { dp, dd });
    }
    Ok(Certificate {
        ledger: DualLedger {
            node_duals,
            arrival_duals,
            steps,
        },
        worst_ratio: worst.as_ref().map(|(r, _)| r.clone()),
        worst_step: worst.map(|(_, t)| t),
    })
}

/// `g(x) = (a^x - 1)/(a - 1)`, with `g(x) = x` as `a -> 1`.
pub fn g_value(a: f64, x: f64) -> f64 {
    if (a - 1.0).abs() < 1e-12 {
        x
    } else {
        (a.powf(x) - 1.0) / (a - 1.0)
    }
}

fn g_slope_at_one(a: f64) -> f64 {
    if (a - 1.0).abs() < 1e-12 {
        1.0
    } else {
        a * a.ln() / (a - 1.0)
    }
}

/// Floating certificate with `y_i = g(x_i)` and `y_t = 1 - g(x_2)`.
pub fn dual_fit_exponential(
    inst: &Instance,
    trace: &FractionalTrace,
    base: f64,
) -> Result<Certificate<f64>> {
    if !(base >= 1.0) {
        return Err(Error::OutOfRange(format!("base {base} must be at least 1")));
    }
    require_unweighted(inst)?;
    const TOL: f64 = 1e-12;
    let mut degrees = vec![zero(); inst.n()];
    let mut node_duals = vec![0.0; inst.n()];
    let mut arrival_duals = Vec::with_capacity(trace.num_arrivals());
    let mut steps = Vec::with_capacity(trace.num_arrivals());
    let mut worst: Option<(f64, usize)> = None;

    for (t, step) in trace.steps().iter().enumerate() {
        let nbrs = inst.neighbors(t);
        let slots = two_smallest(nbrs, &degrees);
        let yt = 1.0 - g_value(base, to_f64(&slots[1].x));
        let mut dp = 0.0;
        let mut dd = yt;
        for (k, &i) in step.members.iter().enumerate() {
            let x_new = step.after(k);
            let new_y = g_value(base, to_f64(&x_new));
            dd += new_y - node_duals[i];
            dp += to_f64(&step.deltas[k]);
            node_duals[i] = new_y;
            degrees[i] = x_new;
        }
        for &i in nbrs {
            if node_duals[i] + yt < 1.0 - TOL {
                return Err(Error::DualInfeasible { node: i, arrival: t });
            }
        }
        if dd > TOL {
            let r = dp / dd;
            if worst.is_none_or(|(best, _)| r < best) {
                worst = Some((r, t));
            }
        }
        arrival_duals.push(yt);
        steps.push(StepDual { dp, dd });
    }
    Ok(Certificate {
        ledger: DualLedger {
            node_duals,
            arrival_duals,
            steps,
        },
        worst_ratio: worst.map(|(r, _)| r),
        worst_step: worst.map(|(_, t)| t),
    })
}

pub fn dual_fit_certificate(
    inst: &Instance,
    trace: &FractionalTrace,
    cfg: &DualFitConfig,
) -> Result<CertificateSummary> {
    match cfg {
        DualFitConfig::Exponential { base } => {
            let c = dual_fit_exponential(inst, trace, *base)?;
            Ok(CertificateSummary {
                worst_ratio: c.worst_ratio,
                worst_step: c.worst_step,
                exact_worst: None,
                dual_total: c.dual_total(),
            })
        }
        DualFitConfig::Levels(levels) => {
            let c = dual_fit_exact(inst, trace, levels)?;
            Ok(CertificateSummary {
                worst_ratio: c.worst_ratio.as_ref().map(to_f64),
                worst_step: c.worst_step,
                dual_total: to_f64(&c.dual_total()),
                exact_worst: c.worst_ratio,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaMode {
    WaterLevel,
    KLevel,
}

fn alpha_terms(a: f64, mode: AlphaMode, x: f64) -> f64 {
    let slope = g_slope_at_one(a);
    if x >= 1.0 {
        let water = 2.0 / (3.0 * slope);
        return match mode {
            AlphaMode::WaterLevel => water,
            AlphaMode::KLevel => water.min(1.0 / slope),
        };
    }
    let xf = x + (1.0 - x * x) / 2.0;
    let (gx, gf) = (g_value(a, x), g_value(a, xf));
    let water = (1.0 - x * x) / (1.0 - 3.0 * gx + 2.0 * gf);
    match mode {
        AlphaMode::WaterLevel => water,
        AlphaMode::KLevel => water.min((1.0 - x) / (2.0 - gx - gf)),
    }
}

/// Minimum over `x` in `[0, 1]` of the ratio expression(s) for base `a`.
pub fn alpha_g(a: f64, mode: AlphaMode) -> f64 {
    const GRID: usize = 100_000;
    let f = |x: f64| alpha_terms(a, mode, x);
    let (mut best_x, mut best) = (0.0, f(0.0));
    for i in 1..=GRID {
        let x = i as f64 / GRID as f64;
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let step = 1.0 / GRID as f64;
    let (mut lo, mut hi) = ((best_x - step).max(0.0), (best_x + step).min(1.0));
    while hi - lo > 1e-9 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(f((lo + hi) / 2.0))
}

/// `sum_{i<k} (1/3)(2/3)^i z_i + (2/3)^k`: the water-level value per node on
/// the `k`-round adversarial instance.
pub fn hardness_ratio(k: u32) -> Result<Rational> {
    if k > 12 {
        return Err(Error::OutOfRange(format!("hardness ratio k = {k} exceeds 12")));
    }
    let third = ratio(1, 3);
    let two_thirds = ratio(2, 3);
    let mut total = zero();
    let mut weight = one();
    for i in 0..k {
        total += &third * &weight * level_value(i);
        weight *= &two_thirds;
    }
    Ok(total + weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{run_fractional, Algorithm};
    use crate::instance::{gen_adversarial_waterlevel, gen_random_instance};

    #[test]
    fn two_level_unweighted_ratio() {
        let mut worst = one();
        for seed in 0..150 {
            let inst = gen_random_instance(8, 14, 4, (1, 1), seed).unwrap();
            let tr = run_fractional(Algorithm::KLevel(2), &inst).unwrap();
            let c = dual_fit_exact(&inst, &tr, &LevelDuals::two_level_unweighted()).unwrap();
            for s in &c.ledger.steps {
                assert!(&s.dd * ratio(19, 36) <= s.dp, "seed {seed}");
            }
            if let Some(r) = &c.worst_ratio {
                worst = worst.min(r.clone());
            }
            assert_eq!(c.dual_total(), c.ledger.steps.iter().map(|s| s.dd.clone()).sum());
        }
        assert_eq!(worst, ratio(19, 36));
    }

    #[test]
    fn vertex_weighted_ratio() {
        let mut worst = one();
        for seed in 0..300 {
            let inst = gen_random_instance(7, 14, 4, (1, 12), seed).unwrap();
            let tr = run_fractional(Algorithm::VertexWeighted, &inst).unwrap();
            let c = dual_fit_exact(&inst, &tr, &LevelDuals::vertex_weighted()).unwrap();
            for s in &c.ledger.steps {
                assert!(&s.dd * ratio(11, 21) <= s.dp, "seed {seed}");
            }
            if let Some(r) = c.worst_ratio {
                worst = worst.min(r);
            }
        }
        assert!(worst >= ratio(11, 21));
    }

    #[test]
    fn vertex_weighted_tight_case() {
        // Two fresh nodes of equal weight split and give exactly 11/21.
        let inst = Instance::unweighted(2, vec![vec![0, 1]]).unwrap();
        let tr = run_fractional(Algorithm::VertexWeighted, &inst).unwrap();
        let c = dual_fit_exact(&inst, &tr, &LevelDuals::vertex_weighted()).unwrap();
        assert_eq!(c.worst_ratio, Some(ratio(11, 21)));
    }

    #[test]
    fn exponential_on_water_level() {
        let alpha = alpha_g(1.6, AlphaMode::WaterLevel);
        for k in 1..=5 {
            let inst = gen_adversarial_waterlevel(k).unwrap();
            let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
            let c = dual_fit_exponential(&inst, &tr, 1.6).unwrap();
            assert!(c.worst_ratio.unwrap() >= alpha - 1e-9);
        }
        for seed in 0..100 {
            let inst = gen_random_instance(8, 16, 4, (1, 1), seed).unwrap();
            let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
            let c = dual_fit_exponential(&inst, &tr, 1.6).unwrap();
            if let Some(r) = c.worst_ratio {
                assert!(r >= alpha - 1e-9, "seed {seed}: {r} < {alpha}");
            }
        }
    }

    #[test]
    fn weighted_instances_rejected_for_unit_duals() {
        let inst = gen_random_instance(4, 4, 2, (2, 3), 1).unwrap();
        let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        assert!(dual_fit_exponential(&inst, &tr, 1.6).is_err());
    }

    #[test]
    fn alpha_values() {
        let a = alpha_g(1.6, AlphaMode::WaterLevel);
        assert!((a - 0.532).abs() < 1e-3, "{a}");
        let closed = (1.6f64.sqrt() + 1.0) / (1.6f64.sqrt() + 3.0);
        assert!((a - closed).abs() < 1e-9);
        assert!((alpha_g(1.0, AlphaMode::WaterLevel) - 0.5).abs() < 1e-9);
        assert!(alpha_g(1.6, AlphaMode::KLevel) <= a);
    }

    #[test]
    fn hardness_values() {
        assert_eq!(hardness_ratio(0).unwrap(), one());
        assert_eq!(hardness_ratio(1).unwrap(), ratio(2, 3));
        assert_eq!(hardness_ratio(2).unwrap(), ratio(5, 9));
        let h = to_f64(&hardness_ratio(12).unwrap());
        assert!((h - 0.5363).abs() < 1e-4, "{h}");
        assert!(hardness_ratio(13).is_err());
    }

    #[test]
    fn adversarial_primal_matches_hardness() {
        for k in 1..=6 {
            let inst = gen_adversarial_waterlevel(k).unwrap();
            let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
            let n = Rational::from_integer(3u64.pow(k).into());
            assert_eq!(tr.primal() / n, hardness_ratio(k).unwrap());
        }
    }
}
