//! Verification harnesses over traces and rounding engines.

mod counterexamples;
mod montecarlo;
mod sweep;

use serde::Serialize;

pub use counterexamples::{
    subset_condition_check, impossibility_demo, three_choice_gap, SubsetConditionReport, SubsetViolation,
    ThreeChoiceGap,
};
pub use montecarlo::{monte_carlo_marginals, EdgeEstimate, MonteCarloReport, SIGMA_BAND};
pub use sweep::{sweep_invariants, MAX_SWEEP_NODES};

use crate::error::Result;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub instance: String,
    pub engine: String,
    pub pass: bool,
    pub worst_dev: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<serde_json::Value>,
}

impl CheckResult {
    pub fn new(check: &str, instance: &str, engine: &str, pass: bool, worst_dev: String) -> Self {
        CheckResult {
            check: check.into(),
            instance: instance.into(),
            engine: engine.into(),
            pass,
            worst_dev,
            counterexample: None,
        }
    }

    pub fn with_counterexample(mut self, value: serde_json::Value) -> Self {
        self.counterexample = Some(value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn merge(mut self, other: VerificationReport) -> Self {
        self.checks.extend(other.checks);
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "pass": self.pass(), "checks": self.checks })
    }

    /// Summary table with columns `check, instance, engine, worst_dev, pass`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "instance", "engine", "worst_dev", "pass"])
            .map_err(csv_error)?;
        for c in &self.checks {
            w.write_record([
                c.check.as_str(),
                c.instance.as_str(),
                c.engine.as_str(),
                c.worst_dev.as_str(),
                if c.pass { "true" } else { "false" },
            ])
            .map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    crate::error::Error::OutOfRange(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json() {
        let r = VerificationReport {
            checks: vec![
                CheckResult::new("marginals", "adv_k2", "maximal", true, "0".into()),
                CheckResult::new("fkg", "adv_k2", "general", false, "1/8".into())
                    .with_counterexample(serde_json::json!({"t": 3})),
            ],
        };
        assert!(!r.pass());
        let csv = r.to_csv().unwrap();
        assert_eq!(
            csv.lines().collect::<Vec<_>>(),
            [
                "check,instance,engine,worst_dev,pass",
                "marginals,adv_k2,maximal,0,true",
                "fkg,adv_k2,general,1/8,false"
            ]
        );
        let json = r.to_json();
        assert_eq!(json["pass"], false);
        assert_eq!(json["checks"][1]["counterexample"]["t"], 3);
        assert!(json["checks"][0].get("counterexample").is_none());
    }
}
