//! Helpers shared by the subcommands.

use serde_json::{json, Value};
use twochoice_core::fractional::{
    check_bbit_precise, dual_fit_certificate, Algorithm, DualFitConfig, FractionalTrace, LevelDuals,
};
use twochoice_core::instance::Instance;
use twochoice_core::randomness::{RngSpec, SourceFactory};
use twochoice_core::rational::{format, to_f64};
use twochoice_core::Result;

/// Base of the exponential dual for the water-level algorithm.
pub const WATER_DUAL_BASE: f64 = 1.6;

/// Slot width: the fewest bits that express every rounding quantity, at least 1.
pub fn slot_bits(trace: &FractionalTrace) -> Result<Option<u32>> {
    Ok(check_bbit_precise(trace, 0)?.minimal_bits().map(|b| b.max(1)))
}

pub fn level_count(algo: Option<Algorithm>) -> Option<u32> {
    algo.and_then(|a| a.levels()).map(|t| t.k() as u32)
}

pub fn source_factory(trace: &FractionalTrace, algo: Option<Algorithm>, rng: &RngSpec) -> Result<SourceFactory> {
    let bits = match rng {
        RngSpec::Iid => None,
        _ => slot_bits(trace)?,
    };
    SourceFactory::new(rng, trace.num_arrivals(), bits, level_count(algo))
}

/// Bias allowance added to the Monte Carlo band.
pub fn rng_delta(rng: &RngSpec) -> f64 {
    match rng {
        RngSpec::SmallBias(d) => to_f64(d),
        _ => 0.0,
    }
}

fn dual_config(algo: Algorithm, inst: &Instance) -> Option<(&'static str, DualFitConfig)> {
    match algo {
        Algorithm::KLevel(2) if inst.is_unweighted() => {
            Some(("levels:two_level", DualFitConfig::Levels(LevelDuals::two_level_unweighted())))
        }
        Algorithm::VertexWeighted => Some(("levels:vertex_weighted", DualFitConfig::Levels(LevelDuals::vertex_weighted()))),
        Algorithm::WaterLevel if inst.is_unweighted() => Some((
            "exponential:1.6",
            DualFitConfig::Exponential { base: WATER_DUAL_BASE },
        )),
        _ => None,
    }
}

/// Dual certificate for the algorithms that have one, as JSON.
pub fn certificate(algo: Algorithm, inst: &Instance, trace: &FractionalTrace) -> Result<Option<Value>> {
    let Some((name, cfg)) = dual_config(algo, inst) else {
        return Ok(None);
    };
    let c = dual_fit_certificate(inst, trace, &cfg)?;
    Ok(Some(json!({
        "config": name,
        "worst_ratio": c.worst_ratio,
        "worst_step": c.worst_step,
        "exact_worst": c.exact_worst.as_ref().map(format),
        "dual_total": c.dual_total,
    })))
}
