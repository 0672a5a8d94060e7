//! Analysis reports as JSON or CSV.
//!
//! Every float is rounded to 12 significant digits so that report bodies are
//! byte-stable across platforms and thread counts. Run metadata (timing,
//! thread count) goes in a separate `run` block that determinism checks skip.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Tolerances;
use crate::pers::{PersAnalysis, PersEstimate, SamplingMode, SkippedTriple, TripleReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub input_format: String,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub mode: SamplingMode,
    pub num_triples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: ConfigEcho,
    pub estimate: PersEstimate,
    pub triples: Vec<TripleReport>,
    pub skipped: Vec<SkippedTriple>,
}

impl AnalysisReport {
    pub fn new(input: &str, input_format: &str, analysis: PersAnalysis) -> Self {
        AnalysisReport {
            config: ConfigEcho {
                input: input.to_string(),
                input_format: input_format.to_string(),
                tolerances: analysis.plan.tolerances,
                seed: analysis.plan.seed,
                mode: analysis.plan.mode,
                num_triples: analysis.plan.num_triples,
            },
            estimate: analysis.estimate,
            triples: analysis.triples,
            skipped: analysis.skipped,
        }
    }
}

/// Non-deterministic facts about a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub threads: usize,
    pub elapsed_ms: u128,
    pub version: String,
}

/// Rounds to 12 significant digits; zero is normalised to `+0.0`.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Serializes any value as pretty JSON with floats rounded to 12 significant digits.
pub fn to_stable_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report values serialize");
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    format!("{}", round_sig12(x))
}

pub const CSV_HEADER: &str = "index,a,b,c,status,p,q,r,delta_ab,delta_bc,delta_ca,applicable,\
accardi_verdict,lower,upper,slack,lp_feasible,lp_residual,reason";

fn csv_body(report: &AnalysisReport) -> String {
    enum Row<'a> {
        Done(&'a TripleReport),
        Skip(&'a SkippedTriple),
    }
    let mut rows: Vec<(usize, Row)> = report
        .triples
        .iter()
        .map(|t| (t.index, Row::Done(t)))
        .chain(report.skipped.iter().map(|s| (s.index, Row::Skip(s))))
        .collect();
    rows.sort_by_key(|(i, _)| *i);

    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (index, row) in rows {
        match row {
            Row::Done(t) => {
                let p = &t.params;
                let a = &t.accardi;
                let _ = writeln!(
                    out,
                    "{index},{},{},{},evaluated,{},{},{},{},{},{},{},{},{},{},{},{},{},",
                    p.observables[0],
                    p.observables[1],
                    p.observables[2],
                    num(p.p),
                    num(p.q),
                    num(p.r),
                    num(p.deviations[0]),
                    num(p.deviations[1]),
                    num(p.deviations[2]),
                    p.applicable,
                    a.verdict.as_str(),
                    num(a.lower),
                    num(a.upper),
                    num(a.slack),
                    t.lp_feasible,
                    num(t.lp_residual),
                );
            }
            Row::Skip(s) => {
                let reason = s.reason.replace([',', '\n', '"'], " ");
                let _ = writeln!(
                    out,
                    "{index},{},{},{},skipped,,,,,,,,,,,,,,{reason}",
                    s.observables[0], s.observables[1], s.observables[2],
                );
            }
        }
    }
    out
}

/// Renders the report. JSON nests the deterministic body under `report`.
pub fn write_report(report: &AnalysisReport, format: ReportFormat, run: Option<&RunMetadata>) -> String {
    match format {
        ReportFormat::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("report".into(), serde_json::to_value(report).expect("report serializes"));
            if let Some(meta) = run {
                doc.insert("run".into(), serde_json::to_value(meta).expect("metadata serializes"));
            }
            to_stable_json(&Value::Object(doc))
        }
        ReportFormat::Csv => csv_body(report),
    }
}

/// The part of a rendered report covered by the determinism contract.
pub fn deterministic_body(rendered: &str, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => rendered.to_string(),
        ReportFormat::Json => match serde_json::from_str::<Value>(rendered) {
            Ok(v) => v.get("report").map(|r| r.to_string()).unwrap_or_default(),
            Err(_) => String::new(),
        },
    }
}
