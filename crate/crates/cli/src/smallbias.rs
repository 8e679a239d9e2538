use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use twochoice_core::randomness::{seed_budget, verify_delta_k, SmallBiasSpace};
use twochoice_core::rational::{parse, Rational};

use crate::error::{CliError, CliResult};
use crate::input::{emit, pretty};

/// Seeds beyond this length are not enumerated by `--verify`.
const MAX_VERIFY_SEED_BITS: u32 = 22;

#[derive(Debug, Args)]
pub struct SmallBiasArgs {
    /// Number of output bits.
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    /// Dependence order.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Seed-space bias, `p/q` or decimal.
    #[arg(long, default_value = "1/16")]
    pub eps: String,
    /// Enumerate every seed and check `(δ, k)`-dependence.
    #[arg(long)]
    pub verify: bool,
    /// Planted events checked on top of the subset sweep.
    #[arg(long, default_value_t = 64)]
    pub events: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report the seed budget of a rounding run over this many arrivals instead.
    #[arg(long)]
    pub budget_arrivals: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub levels: u32,
    #[arg(long, default_value_t = 2)]
    pub bits: u32,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn cmd_smallbias(args: &SmallBiasArgs) -> CliResult<()> {
    if let Some(arrivals) = args.budget_arrivals {
        let b = seed_budget(arrivals, args.levels, args.bits, args.delta)?;
        emit(args.output.as_deref(), &pretty(&serde_json::to_value(&b)?)?)?;
        return if b.within_bound() {
            Ok(())
        } else {
            Err(CliError::Failed(format!(
                "{} seed bits exceed the bound {:.2}",
                b.accounting.seed_bits, b.bound_bits
            )))
        };
    }
    let eps: Rational = parse(&args.eps).map_err(|e| CliError::Usage(format!("--eps: {}", e.0)))?;
    let space = SmallBiasSpace::new(args.m, args.k, &eps)?;
    let mut report = json!({ "accounting": space.accounting() });
    let mut holds = true;
    if args.verify {
        if space.seed_bits() > MAX_VERIFY_SEED_BITS {
            return Err(CliError::Usage(format!(
                "{} seed bits; --verify enumerates at most {MAX_VERIFY_SEED_BITS}",
                space.seed_bits()
            )));
        }
        let r = verify_delta_k(&space.distribution()?, space.k(), &space.delta, args.events, args.seed);
        holds = r.holds;
        report["verification"] = serde_json::to_value(&r)?;
    }
    emit(args.output.as_deref(), &pretty(&report)?)?;
    if holds {
        Ok(())
    } else {
        Err(CliError::Failed("space is not (δ, k)-dependent".into()))
    }
}
