//! End-to-end runs through the public API.

use crate::fractional::{export_trace_jsonl, import_trace_jsonl, run_fractional, Algorithm};
use crate::instance::{gen_random_instance, max_weight_matching, parse_instance, serialize_instance};
use crate::randomness::{trial_seed, RngSpec, SourceFactory};
use crate::rounding::{Engine, RoundingPlan};
use crate::verify::monte_carlo_marginals;

#[test]
fn text_round_trip_preserves_runs() {
    for seed in 0..10 {
        let inst = gen_random_instance(7, 12, 3, (1, 5), seed).unwrap();
        let back = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(back, inst);
        for algo in [Algorithm::WaterLevel, Algorithm::KLevel(3), Algorithm::VertexWeighted] {
            let tr = run_fractional(algo, &inst).unwrap();
            let again = import_trace_jsonl(&back, &export_trace_jsonl(&tr, None)).unwrap();
            assert_eq!(again, tr);
        }
    }
}

#[test]
fn sampled_matchings_are_valid_and_bounded_by_opt() {
    let inst = gen_random_instance(10, 20, 3, (1, 4), 99).unwrap();
    let (opt, _) = max_weight_matching(&inst);
    for algo in [Algorithm::KLevel(2), Algorithm::VertexWeighted] {
        let tr = run_fractional(algo, &inst).unwrap();
        assert!(tr.primal() <= &opt);
        let plan = RoundingPlan::new(&tr, Engine::Maximal).unwrap();
        for rng in [RngSpec::Iid, RngSpec::KWise(8), "smallbias:1/2".parse().unwrap()] {
            let bits = crate::fractional::check_bbit_precise(&tr, 0)
                .unwrap()
                .minimal_bits()
                .map(|b| b.max(1));
            let factory = SourceFactory::new(&rng, tr.num_arrivals(), bits, algo.levels().map(|l| l.k() as u32)).unwrap();
            for trial in 0..50 {
                let mut src = factory.make(trial_seed(5, trial)).unwrap();
                let m = plan.sample(src.as_mut()).unwrap();
                m.validate_against(&inst).unwrap();
                assert!(m.weight(&inst) <= opt);
            }
        }
    }
}

#[test]
fn general_and_maximal_engines_agree_in_distribution() {
    let inst = gen_random_instance(6, 10, 2, (1, 1), 4).unwrap();
    let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
    let factory = SourceFactory::new(&RngSpec::Iid, tr.num_arrivals(), None, None).unwrap();
    for engine in [Engine::General, Engine::Maximal] {
        let plan = RoundingPlan::new(&tr, engine).unwrap();
        let r = monte_carlo_marginals(&tr, &plan, &factory, 20_000, 3, 0.0).unwrap();
        assert!(r.pass, "{engine}: max dev {}", r.max_abs_dev);
    }
}
