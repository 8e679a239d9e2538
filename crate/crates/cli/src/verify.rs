use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;
use twochoice_core::fractional::{
    check_maximal, check_sound, import_trace_jsonl, run_fractional, Algorithm, FractionalTrace,
};
use twochoice_core::randomness::RngSpec;
use twochoice_core::rational::{format, zero, Rational};
use twochoice_core::rounding::{exact_marginals, Engine, RoundingPlan, MAX_TRACKED_NODES};
use twochoice_core::verify::{
    impossibility_demo, monte_carlo_marginals, sweep_invariants, three_choice_gap, CheckResult,
    VerificationReport, MAX_SWEEP_NODES,
};
use twochoice_core::Error;

use crate::error::{CliError, CliResult};
use crate::input::{emit, load_instance, pretty, read_file};
use crate::pipeline::{certificate, rng_delta, source_factory};
use crate::{EngineArg, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Impossibility,
    ThreeChoice,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance file, `adv_k<N>` or `example_impossible`.
    #[arg(long, required_unless_present = "demo")]
    pub input: Option<String>,
    /// JSON-lines trace to check instead of running `--algo`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value = "water")]
    pub algo: Algorithm,
    /// Engine to check; by default every engine the trace admits.
    #[arg(long)]
    pub engine: Option<EngineArg>,
    #[arg(long, default_value = "iid")]
    pub rng: RngSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo trials per engine; 0 skips sampling.
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    #[arg(long, value_enum)]
    pub demo: Option<Demo>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let report = match (args.demo, &args.input) {
        (Some(Demo::Impossibility), _) => impossibility_demo(),
        (Some(Demo::ThreeChoice), _) => three_choice_report()?,
        (None, Some(input)) => instance_report(args, input)?,
        (None, None) => return Err(CliError::Usage("verify needs --input or --demo".into())),
    };
    let text = match args.format {
        Format::Json => pretty(&report.to_json())?,
        Format::Csv => report.to_csv()?,
    };
    emit(args.output.as_deref(), &text)?;
    match report.checks.iter().find(|c| !c.pass) {
        None => Ok(()),
        Some(c) => Err(CliError::Failed(match &c.counterexample {
            Some(e) => format!("check `{}` failed on {}: {e}", c.check, c.instance),
            None => format!("check `{}` failed on {}", c.check, c.instance),
        })),
    }
}

fn three_choice_report() -> CliResult<VerificationReport> {
    let g = three_choice_gap()?;
    let name = "three_choice";
    Ok(VerificationReport {
        checks: vec![
            CheckResult::new("greedy_below_fractional", name, "none", g.gap > zero(), format(&g.gap))
                .with_counterexample(json!({
                    "fractional": format(&g.fractional),
                    "greedy": format(&g.greedy),
                    "policies": g.policies,
                })),
            CheckResult::new("subset_condition", name, "none", g.subset_condition_holds, "0".into()),
        ],
    })
}

fn instance_report(args: &VerifyArgs, input: &str) -> CliResult<VerificationReport> {
    let inst = load_instance(input)?;
    let (trace, algo) = match &args.trace {
        Some(path) => match import_trace_jsonl(&inst, &read_file(path)?) {
            Ok(t) => (t, None),
            Err(e @ (Error::TraceRejected(_) | Error::InvariantViolation { .. })) => {
                let arrival = match &e {
                    Error::InvariantViolation { arrival, .. } => json!(arrival),
                    _ => json!(null),
                };
                let c = CheckResult::new("trace_import", input, "none", false, "1".into())
                    .with_counterexample(json!({ "arrival": arrival, "error": e.to_string() }));
                return Ok(VerificationReport { checks: vec![c] });
            }
            Err(e) => return Err(e.into()),
        },
        None => (run_fractional(args.algo, &inst)?, Some(args.algo)),
    };

    let mut report = VerificationReport::default();
    for (name, cond) in [("soundness", check_sound(&trace)), ("maximality", check_maximal(&trace))] {
        let mut c = CheckResult::new(
            name,
            input,
            "none",
            cond.holds() || name == "maximality",
            cond.violations.first().map(|v| format(&v.margin())).unwrap_or_else(|| "0".into()),
        );
        if let Some(v) = cond.violations.first() {
            c = c.with_counterexample(json!({
                "arrival": v.arrival,
                "lhs": format(&v.lhs),
                "rhs": format(&v.rhs),
            }));
        }
        report.checks.push(c);
    }
    if !report.pass() {
        return Ok(report);
    }
    if let Some(algo) = algo {
        let c = match certificate(algo, &inst, &trace) {
            Ok(Some(cert)) => Some(CheckResult::new("dual_certificate", input, "none", true, "0".into()).with_counterexample(cert)),
            Ok(None) => None,
            Err(Error::DualInfeasible { node, arrival }) => Some(
                CheckResult::new("dual_certificate", input, "none", false, "1".into())
                    .with_counterexample(json!({ "node": node, "arrival": arrival })),
            ),
            Err(e) => return Err(e.into()),
        };
        report.checks.extend(c);
    }

    let engines: Vec<Engine> = match args.engine.and_then(|e| e.engine()) {
        Some(e) => vec![e],
        None => {
            let mut v = Vec::new();
            if trace.n() <= MAX_TRACKED_NODES {
                v.push(Engine::General);
            }
            if check_maximal(&trace).holds() {
                v.push(Engine::Maximal);
            }
            v
        }
    };
    for engine in engines {
        report = report.merge(engine_checks(args, input, &trace, algo, engine)?);
    }
    Ok(report)
}

fn engine_checks(
    args: &VerifyArgs,
    input: &str,
    trace: &FractionalTrace,
    algo: Option<Algorithm>,
    engine: Engine,
) -> CliResult<VerificationReport> {
    let mut report = if trace.n() <= MAX_SWEEP_NODES {
        sweep_invariants(trace, engine, input)?
    } else if trace.n() <= MAX_TRACKED_NODES {
        let exact = exact_marginals(trace, engine)?;
        let want = trace.edge_values();
        let worst = want
            .iter()
            .map(|(e, x)| (e, abs_diff(x, &exact.get(e).cloned().unwrap_or_else(zero))))
            .max_by(|a, b| a.1.cmp(&b.1));
        let stray = exact.keys().any(|e| !want.contains_key(e));
        let dev = worst.as_ref().map(|w| w.1.clone()).unwrap_or_else(zero);
        let mut c = CheckResult::new("marginals", input, &engine.to_string(), !stray && dev == zero(), format(&dev));
        if let Some(((i, t), _)) = worst.filter(|w| w.1 != zero()) {
            c = c.with_counterexample(json!({ "node": i, "arrival": t }));
        }
        VerificationReport { checks: vec![c] }
    } else if args.trials == 0 {
        return Err(CliError::Usage(format!(
            "{} nodes exceed exact tracking ({MAX_TRACKED_NODES}); pass --trials for a sampled check",
            trace.n()
        )));
    } else {
        VerificationReport::default()
    };
    if args.trials > 0 && report.pass() {
        let plan = RoundingPlan::new(trace, engine)?;
        let factory = source_factory(trace, algo, &args.rng)?;
        let mc = monte_carlo_marginals(trace, &plan, &factory, args.trials, args.seed, rng_delta(&args.rng))?;
        let mut c = CheckResult::new("monte_carlo", input, &engine.to_string(), mc.pass, mc.max_abs_dev.to_string());
        if let Some(e) = mc.edges.iter().find(|e| !e.within_band) {
            c = c.with_counterexample(json!({
                "node": e.node,
                "arrival": e.arrival,
                "x": e.x,
                "mean": e.mean,
                "sigma": e.sigma,
            }));
        }
        report.checks.push(c);
    }
    Ok(report)
}

fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    if a > b {
        a - b
    } else {
        b - a
    }
}
