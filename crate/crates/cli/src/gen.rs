use std::path::PathBuf;

use clap::{Args, ValueEnum};
use twochoice_core::instance::{
    gen_adversarial_waterlevel, gen_example_impossible, gen_random_instance, serialize_instance,
};

use crate::error::{CliError, CliResult};
use crate::input::emit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Adv,
    Impossible,
    Random,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Rounds of the adversarial construction.
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub arrivals: usize,
    #[arg(long, default_value_t = 2)]
    pub max_degree: usize,
    /// Inclusive integer weight range `lo:hi`.
    #[arg(long, default_value = "1:1")]
    pub weights: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn weight_range(s: &str) -> CliResult<(i64, i64)> {
    let bad = || CliError::Usage(format!("weight range `{s}` is not lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?))
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let inst = match args.family {
        Family::Adv => gen_adversarial_waterlevel(args.k)?,
        Family::Impossible => gen_example_impossible().0,
        Family::Random => gen_random_instance(
            args.n,
            args.arrivals,
            args.max_degree,
            weight_range(&args.weights)?,
            args.seed,
        )?,
    };
    emit(args.output.as_deref(), &serialize_instance(&inst))
}
