//! JSON-lines export of traces, one object per arrival.

use serde::{Deserialize, Serialize};

use super::{DualLedger, FractionalTrace, StepKind, StepRecord};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::{serde_str, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLine {
    pub t: usize,
    pub members: Vec<usize>,
    #[serde(with = "serde_str::vec")]
    pub prior: Vec<Rational>,
    #[serde(with = "serde_str::vec")]
    pub deltas: Vec<Rational>,
    pub kind: StepKind,
    #[serde(with = "serde_str")]
    pub dp: Rational,
    #[serde(with = "serde_str::opt", default)]
    pub dd: Option<Rational>,
}

pub fn export_trace_jsonl(trace: &FractionalTrace, ledger: Option<&DualLedger<Rational>>) -> String {
    let mut out = String::new();
    for (t, s) in trace.steps().iter().enumerate() {
        let dp = s
            .members
            .iter()
            .zip(&s.deltas)
            .map(|(&i, d)| &trace.weights()[i] * d)
            .sum();
        let line = TraceLine {
            t: s.t,
            members: s.members.clone(),
            prior: s.prior.clone(),
            deltas: s.deltas.clone(),
            kind: s.kind,
            dp,
            dd: ledger.map(|l| l.steps[t].dd.clone()),
        };
        out.push_str(&serde_json::to_string(&line).expect("trace lines serialize"));
        out.push('\n');
    }
    out
}

/// Parses and validates a trace against `inst`; errors name the offending arrival.
pub fn import_trace_jsonl(inst: &Instance, text: &str) -> Result<FractionalTrace> {
    let mut steps = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceLine = serde_json::from_str(line)
            .map_err(|e| Error::TraceRejected(format!("line {}: {e}", lineno + 1)))?;
        steps.push(StepRecord {
            t: rec.t,
            members: rec.members,
            prior: rec.prior,
            deltas: rec.deltas,
            kind: rec.kind,
        });
    }
    FractionalTrace::from_steps(inst, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{dual_fit_exact, run_fractional, Algorithm, LevelDuals};
    use crate::instance::gen_random_instance;

    #[test]
    fn round_trip() {
        let inst = gen_random_instance(6, 10, 3, (1, 4), 3).unwrap();
        let tr = run_fractional(Algorithm::VertexWeighted, &inst).unwrap();
        let cert = dual_fit_exact(&inst, &tr, &LevelDuals::vertex_weighted()).unwrap();
        let text = export_trace_jsonl(&tr, Some(&cert.ledger));
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains("\"dd\":"));
        assert_eq!(import_trace_jsonl(&inst, &text).unwrap(), tr);
    }

    #[test]
    fn corrupted_record_names_arrival() {
        let inst = gen_random_instance(5, 6, 2, (1, 1), 11).unwrap();
        let tr = run_fractional(Algorithm::WaterLevel, &inst).unwrap();
        let target = tr.steps().iter().position(|s| !s.is_noop()).unwrap();
        let text = export_trace_jsonl(&tr, None);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut rec: TraceLine = serde_json::from_str(&lines[target]).unwrap();
        rec.deltas[0] = rec.deltas[0].clone() * Rational::from_integer(4.into());
        lines[target] = serde_json::to_string(&rec).unwrap();
        match import_trace_jsonl(&inst, &lines.join("\n")) {
            Err(Error::InvariantViolation { arrival, .. }) => assert_eq!(arrival, target),
            other => panic!("unexpected {other:?}"),
        }
    }
}
