//! Report assembly, assertion evaluation and artifact output.

use crate::config::{AssertOp, AssertSpec, ExperimentConfig};
use crate::error::CliError;
use crate::experiments::Outcome;
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SCHEMA_ID: &str = "kalikow-report/v1";
pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "raw.csv";

/// The versioned JSON schema every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.v1.json");

#[derive(Debug, Clone, Serialize)]
pub struct CsvInfo {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionResult {
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub op: AssertOp,
    pub threshold: Value,
    pub observed: Vec<Value>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub name: String,
    pub command: String,
    pub kind: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: Value,
    pub units: BTreeMap<String, String>,
    pub csv: CsvInfo,
    pub result: Value,
    pub assertions: Vec<AssertionResult>,
    pub passed: bool,
}

impl Report {
    pub fn new(cfg: &ExperimentConfig, seed: u64, outcome: &Outcome) -> Result<Self, CliError> {
        let assertions = cfg.asserts.iter().map(|a| evaluate(a, &outcome.result)).collect::<Result<Vec<_>, _>>()?;
        let passed = assertions.iter().all(|a| a.pass);
        Ok(Self {
            schema: SCHEMA_ID,
            name: cfg.name.clone(),
            command: cfg.experiment.command().to_string(),
            kind: cfg.experiment.kind().to_string(),
            seed,
            config_hash: cfg.hash(),
            config: serde_json::to_value(cfg).expect("configuration serializes"),
            units: outcome.units.clone(),
            csv: CsvInfo { file: CSV_FILE.into(), columns: outcome.columns.clone(), rows: outcome.rows.len() },
            result: outcome.result.clone(),
            assertions,
            passed,
        })
    }

    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn failures(&self) -> Vec<String> {
        self.assertions
            .iter()
            .filter(|a| !a.pass)
            .map(|a| {
                let name = a.label.as_deref().unwrap_or(&a.metric);
                format!("{name}: observed {:?}, required {:?} {}", a.observed, a.op, a.threshold)
            })
            .collect()
    }
}

/// Every value reached by a slash-separated path; `*` fans out over arrays.
pub fn select<'a>(root: &'a Value, path: &str) -> Vec<&'a Value> {
    let mut current = vec![root];
    for part in path.split('/').filter(|p| !p.is_empty()) {
        let mut next = Vec::new();
        for v in current {
            match (part, v) {
                ("*", Value::Array(items)) => next.extend(items.iter()),
                (key, Value::Object(map)) => next.extend(map.get(key)),
                (idx, Value::Array(items)) => next.extend(idx.parse::<usize>().ok().and_then(|i| items.get(i))),
                _ => {}
            }
        }
        current = next;
    }
    current
}

fn compare(op: AssertOp, observed: &Value, threshold: &Value) -> bool {
    match (observed.as_f64(), threshold.as_f64()) {
        (Some(x), Some(t)) => match op {
            AssertOp::Lt => x < t,
            AssertOp::Le => x <= t,
            AssertOp::Gt => x > t,
            AssertOp::Ge => x >= t,
            AssertOp::Eq => x == t,
        },
        _ => op == AssertOp::Eq && observed == threshold,
    }
}

fn evaluate(spec: &AssertSpec, result: &Value) -> Result<AssertionResult, CliError> {
    let observed: Vec<Value> = select(result, &spec.metric).into_iter().cloned().collect();
    if observed.is_empty() {
        return Err(CliError::ConfigInvalid(format!("assertion metric {:?} selects nothing in the result", spec.metric)));
    }
    let pass = observed.iter().all(|v| compare(spec.op, v, &spec.value));
    Ok(AssertionResult {
        metric: spec.metric.clone(),
        label: spec.label.clone(),
        op: spec.op,
        threshold: spec.value.clone(),
        observed,
        pass,
    })
}

/// Writes `report.json` and `raw.csv` under `<outdir>/<name>/`.
pub fn write_artifacts(outdir: &Path, report: &Report, outcome: &Outcome) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::RuntimeFailure(e.to_string());
    let dir = outdir.join(&report.name);
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut csv = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, row: &[String]| w.write_record(row).map_err(|e| CliError::RuntimeFailure(e.to_string()));
    write(&mut csv, &outcome.columns)?;
    for row in &outcome.rows {
        write(&mut csv, row)?;
    }
    let bytes = csv.into_inner().map_err(|e| CliError::RuntimeFailure(e.to_string()))?;
    std::fs::write(dir.join(CSV_FILE), bytes).map_err(io)?;
    std::fs::write(dir.join(REPORT_FILE), report.to_pretty()).map_err(io)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn select_walks_objects_arrays_and_wildcards() {
        let v = json!({ "rows": [{ "f": 0.1 }, { "f": 0.3 }], "ks": 0.02, "list": [5, 6] });
        assert_eq!(select(&v, "ks"), vec![&json!(0.02)]);
        assert_eq!(select(&v, "rows/*/f"), vec![&json!(0.1), &json!(0.3)]);
        assert_eq!(select(&v, "list/1"), vec![&json!(6)]);
        assert!(select(&v, "rows/*/g").is_empty());
        assert!(select(&v, "list/9").is_empty());
    }

    #[test]
    fn comparisons() {
        assert!(compare(AssertOp::Lt, &json!(0.04), &json!(0.05)));
        assert!(!compare(AssertOp::Lt, &json!(0.05), &json!(0.05)));
        assert!(compare(AssertOp::Le, &json!(0.05), &json!(0.05)));
        assert!(compare(AssertOp::Ge, &json!(3), &json!(3.0)));
        assert!(compare(AssertOp::Eq, &json!("bounded"), &json!("bounded")));
        assert!(compare(AssertOp::Eq, &json!(true), &json!(true)));
        assert!(!compare(AssertOp::Gt, &json!("x"), &json!(1)));
    }

    #[test]
    fn wildcard_assertion_needs_every_value() {
        let result = json!({ "rows": [{ "f": 0.001 }, { "f": 0.02 }] });
        let spec = AssertSpec { metric: "rows/*/f".into(), op: AssertOp::Le, value: json!(0.01), label: None };
        let r = evaluate(&spec, &result).unwrap();
        assert!(!r.pass);
        assert_eq!(r.observed.len(), 2);
        let missing = AssertSpec { metric: "nope".into(), op: AssertOp::Le, value: json!(1), label: None };
        assert!(matches!(evaluate(&missing, &result), Err(CliError::ConfigInvalid(_))));
    }
}
