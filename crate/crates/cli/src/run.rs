use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};
use twochoice_core::fractional::{check_maximal, check_sound, export_trace_jsonl, hardness_ratio, run_fractional, Algorithm};
use twochoice_core::instance::max_weight_matching;
use twochoice_core::randomness::{trial_seed, RngSpec};
use twochoice_core::rational::{format, to_f64};
use twochoice_core::rounding::RoundingPlan;
use twochoice_core::verify::monte_carlo_marginals;

use crate::error::{CliError, CliResult};
use crate::input::{adversarial_rounds, emit, load_instance, pretty};
use crate::pipeline::{certificate, rng_delta, slot_bits, source_factory};
use crate::{EngineArg, Format};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Instance file, `adv_k<N>` or `example_impossible`.
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value = "water")]
    pub algo: Algorithm,
    #[arg(long, default_value = "none")]
    pub engine: EngineArg,
    #[arg(long, default_value = "iid")]
    pub rng: RngSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write the fractional trace as JSON lines.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let inst = load_instance(&args.input)?;
    log::info!("{}: n = {}, T = {}", args.input, inst.n(), inst.num_arrivals());
    let trace = run_fractional(args.algo, &inst)?;
    if let Some(v) = check_sound(&trace).violations.first() {
        return Err(CliError::Failed(format!(
            "arrival {}: trace is not sound ({} > {})",
            v.arrival,
            format(&v.lhs),
            format(&v.rhs)
        )));
    }
    let (opt, _) = max_weight_matching(&inst);
    let opt_f = to_f64(&opt);
    let ratio = |value: f64| if opt_f == 0.0 { 1.0 } else { value / opt_f };
    let primal = trace.primal();
    let cert = certificate(args.algo, &inst, &trace)?;

    let mut report = json!({
        "instance": args.input,
        "algo": args.algo.to_string(),
        "engine": args.engine.to_string(),
        "n": inst.n(),
        "arrivals": inst.num_arrivals(),
        "edges": inst.num_edges(),
        "primal": format(primal),
        "opt": format(&opt),
        "ratio": ratio(to_f64(primal)),
        "maximal": check_maximal(&trace).holds(),
        "slot_bits": slot_bits(&trace)?,
        "certificate": cert,
    });
    if let (Some(k), Algorithm::WaterLevel) = (adversarial_rounds(&args.input), args.algo) {
        report["hardness_ratio"] = json!(to_f64(&hardness_ratio(k)?));
    }
    if let Some(engine) = args.engine.engine() {
        report["rounding"] = rounding_section(args, &trace, engine, &ratio)?;
    }

    if let Some(path) = &args.trace_out {
        emit(Some(path), &export_trace_jsonl(&trace, None))?;
    }
    let text = match args.format {
        Format::Json => pretty(&report)?,
        Format::Csv => summary_csv(&report)?,
    };
    emit(args.output.as_deref(), &text)
}

fn rounding_section(
    args: &RunArgs,
    trace: &twochoice_core::fractional::FractionalTrace,
    engine: twochoice_core::rounding::Engine,
    ratio: &dyn Fn(f64) -> f64,
) -> CliResult<Value> {
    let plan = RoundingPlan::new(trace, engine)?;
    let factory = source_factory(trace, Some(args.algo), &args.rng)?;
    let mut src = factory.make(trial_seed(args.seed, 0))?;
    let first = plan.sample(src.as_mut())?;
    let first_weight: f64 = first.edges().map(|(i, _)| to_f64(&trace.weights()[i])).sum();
    let mut section = json!({
        "rng": args.rng.to_string(),
        "seed": args.seed,
        "ops_total": plan.ops_per_arrival().iter().sum::<u64>(),
        "first_trial": {
            "size": first.len(),
            "weight": first_weight,
            "bits_consumed": src.bits_consumed(),
        },
        "seed_accounting": factory.accounting(),
    });
    if args.trials > 0 {
        let mc = monte_carlo_marginals(trace, &plan, &factory, args.trials, args.seed, rng_delta(&args.rng))?;
        section["monte_carlo"] = json!({
            "trials": mc.trials,
            "mean_weight": mc.mean_weight,
            "ratio": ratio(mc.mean_weight),
            "max_abs_dev": mc.max_abs_dev,
            "within_band": mc.pass,
        });
    }
    Ok(section)
}

fn summary_csv(report: &Value) -> CliResult<String> {
    let cell = |v: &Value| match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let fields = [
        ("instance", &report["instance"]),
        ("algo", &report["algo"]),
        ("engine", &report["engine"]),
        ("n", &report["n"]),
        ("T", &report["arrivals"]),
        ("P", &report["primal"]),
        ("OPT", &report["opt"]),
        ("ratio", &report["ratio"]),
        ("mean_weight", &report["rounding"]["monte_carlo"]["mean_weight"]),
        ("rounded_ratio", &report["rounding"]["monte_carlo"]["ratio"]),
        ("seed_bits", &report["rounding"]["seed_accounting"]["seed_bits"]),
    ];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields.iter().map(|(k, _)| *k))?;
    w.write_record(fields.iter().map(|(_, v)| cell(v)))?;
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
