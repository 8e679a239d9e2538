use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use twochoice_core::fractional::{hardness_ratio, run_fractional, Algorithm};
use twochoice_core::instance::{gen_adversarial_waterlevel, gen_random_instance, max_weight_matching, Instance};
use twochoice_core::randomness::RngSpec;
use twochoice_core::rational::{format, to_f64};
use twochoice_core::rounding::RoundingPlan;
use twochoice_core::verify::monte_carlo_marginals;

use crate::error::{CliError, CliResult};
use crate::input::{emit, pretty};
use crate::pipeline::{rng_delta, source_factory};
use crate::{EngineArg, Format};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated families: `adv` or `random`.
    #[arg(long, default_value = "adv")]
    pub families: String,
    /// Parameter list per family, `1..7` or `1,3,5`. For `random` it is the seed.
    #[arg(long, default_value = "1..5")]
    pub ks: String,
    #[arg(long, default_value = "water")]
    pub algos: String,
    #[arg(long, default_value = "none")]
    pub engines: String,
    #[arg(long, default_value = "iid")]
    pub rngs: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Leave the wall-time column empty so tables are reproducible.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub k: u64,
    pub algo: String,
    pub engine: String,
    pub rng: String,
    pub n: Option<usize>,
    #[serde(rename = "T")]
    pub arrivals: Option<usize>,
    #[serde(rename = "P")]
    pub primal: Option<String>,
    #[serde(rename = "OPT")]
    pub opt: Option<String>,
    pub ratio: Option<f64>,
    pub hardness: Option<f64>,
    pub rounded_ratio: Option<f64>,
    pub marginal_dev: Option<f64>,
    pub band_pass: Option<bool>,
    pub seed_bits: Option<u32>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

const HEADER: [&str; 17] = [
    "family", "k", "algo", "engine", "rng", "n", "T", "P", "OPT", "ratio", "hardness", "rounded_ratio",
    "marginal_dev", "band_pass", "seed_bits", "wall_ms", "error",
];

fn list<T>(s: &str, parse: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(parse).collect()
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_ks(s: &str) -> CliResult<Vec<u64>> {
    let mut out = Vec::new();
    for part in list(s, |p| Ok(p.to_string()))? {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(usage)?, b.parse().map_err(usage)?);
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(usage)?),
        }
    }
    Ok(out)
}

fn family_instance(family: &str, k: u64) -> CliResult<Instance> {
    match family {
        "adv" => Ok(gen_adversarial_waterlevel(u32::try_from(k).map_err(usage)?)?),
        "random" => Ok(gen_random_instance(8, 16, 3, (1, 1), k)?),
        other => Err(CliError::Usage(format!("unknown family `{other}`"))),
    }
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let families = list(&args.families, |f| match f {
        "adv" | "random" => Ok(f.to_string()),
        other => Err(CliError::Usage(format!("unknown family `{other}`"))),
    })?;
    let ks = parse_ks(&args.ks)?;
    let algos = list(&args.algos, |a| a.parse::<Algorithm>().map_err(usage))?;
    let engines = list(&args.engines, |e| e.parse::<EngineArg>().map_err(usage))?;
    let rngs = list(&args.rngs, |r| r.parse::<RngSpec>().map_err(usage))?;

    let mut rows = Vec::new();
    for family in &families {
        for &k in &ks {
            for &algo in &algos {
                for &engine in &engines {
                    // The randomness source only matters when rounding.
                    let rng_choices: Vec<Option<&RngSpec>> = match engine.engine() {
                        None => vec![None],
                        Some(_) => rngs.iter().map(Some).collect(),
                    };
                    for rng in rng_choices {
                        let mut row = BenchRow {
                            family: family.clone(),
                            k,
                            algo: algo.to_string(),
                            engine: engine.to_string(),
                            rng: rng.map(|r| r.to_string()).unwrap_or_default(),
                            ..BenchRow::default()
                        };
                        let start = Instant::now();
                        if let Err(e) = fill_row(&mut row, args, family, k, algo, engine, rng) {
                            log::warn!("{family} k={k} {algo} {engine}: {e}");
                            row.error = Some(e.to_string());
                        }
                        if !args.no_timing {
                            row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }

    let text = match args.format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(HEADER)?;
            for r in &rows {
                w.serialize(r)?;
            }
            String::from_utf8(w.into_inner().map_err(usage)?).expect("csv output is utf-8")
        }
        Format::Json => pretty(&serde_json::to_value(&rows)?)?,
    };
    emit(args.output.as_deref(), &text)
}

fn fill_row(
    row: &mut BenchRow,
    args: &BenchArgs,
    family: &str,
    k: u64,
    algo: Algorithm,
    engine: EngineArg,
    rng: Option<&RngSpec>,
) -> CliResult<()> {
    let inst = family_instance(family, k)?;
    row.n = Some(inst.n());
    row.arrivals = Some(inst.num_arrivals());
    let trace = run_fractional(algo, &inst)?;
    let (opt, _) = max_weight_matching(&inst);
    let opt_f = to_f64(&opt);
    let ratio = |v: f64| if opt_f == 0.0 { 1.0 } else { v / opt_f };
    row.primal = Some(format(trace.primal()));
    row.opt = Some(format(&opt));
    row.ratio = Some(ratio(to_f64(trace.primal())));
    if family == "adv" && algo == Algorithm::WaterLevel {
        row.hardness = Some(to_f64(&hardness_ratio(k as u32)?));
    }
    let (Some(engine), Some(rng)) = (engine.engine(), rng) else {
        return Ok(());
    };
    let plan = RoundingPlan::new(&trace, engine)?;
    let factory = source_factory(&trace, Some(algo), rng)?;
    row.seed_bits = factory.accounting().map(|a| a.seed_bits);
    if args.trials > 0 {
        let mc = monte_carlo_marginals(&trace, &plan, &factory, args.trials, args.seed, rng_delta(rng))?;
        row.rounded_ratio = Some(ratio(mc.mean_weight));
        row.marginal_dev = Some(mc.max_abs_dev);
        row.band_pass = Some(mc.pass);
    }
    Ok(())
}
