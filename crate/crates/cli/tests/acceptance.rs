//! Acceptance suite: runs every bundled preset at its shipped thresholds and
//! prints one PASS/FAIL line per criterion.
//!
//! Criteria 4, 7 and 13 are known to fail at the prescribed sample sizes; the
//! run reports them as FAIL and only errors when any other criterion fails or
//! when one of those starts passing without the list being updated.

use kalikow_cli::config::ExperimentConfig;
use kalikow_cli::presets::{list_presets, load_preset};
use kalikow_cli::report::Report;
use std::time::{Duration, Instant};

const KNOWN_FAILING: &[usize] = &[4, 7, 13];

/// Runtime budget in seconds for each preset, in criterion order.
const BUDGETS: &[u64] = &[5, 30, 10, 120, 180, 300, 300, 120, 60, 180, 30, 60, 120, 60, 180];

struct Line {
    criterion: usize,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn evaluate(cfg: &ExperimentConfig, workers: usize) -> Result<Report, String> {
    let seed = cfg.seed.expect("presets ship seeds");
    kalikow_cli::evaluate(cfg, seed, workers).map(|(r, _)| r).map_err(|e| e.to_string())
}

fn summary(report: &Report) -> String {
    report
        .assertions
        .iter()
        .map(|a| {
            let name = a.label.as_deref().unwrap_or(&a.metric);
            let observed: Vec<String> = a.observed.iter().map(|v| v.to_string()).collect();
            format!("{name} = [{}] {:?} {}", observed.join(", "), a.op, a.threshold)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn main() {
    let workers = kalikow_cli::default_workers();
    let names = list_presets();
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let criterion = i + 1;
        let cfg = load_preset(name).expect("preset parses");
        let start = Instant::now();
        let outcome = evaluate(&cfg, workers);
        let elapsed = start.elapsed();
        let (pass, detail) = match &outcome {
            Ok(r) => (r.passed, summary(r)),
            Err(e) => (false, format!("error: {e}")),
        };
        lines.push(Line { criterion, pass, detail, elapsed });
        reports.push((cfg, outcome.ok().map(|r| r.to_pretty())));
    }

    let start = Instant::now();
    let mut mismatched = Vec::new();
    for (cfg, first) in &reports {
        let one = evaluate(cfg, 1).map(|r| r.to_pretty());
        let eight = evaluate(cfg, 8).map(|r| r.to_pretty());
        let same = matches!((&one, &eight), (Ok(a), Ok(b)) if a == b) && first.as_ref() == one.as_ref().ok();
        if !same {
            mismatched.push(cfg.name.clone());
        }
    }
    let det = &mut lines[13];
    det.elapsed += start.elapsed();
    det.pass &= mismatched.is_empty();
    det.detail = if mismatched.is_empty() {
        format!("{} presets byte-identical at workers 1, 8 and {workers}; {}", reports.len(), det.detail)
    } else {
        format!("reports differ for {}; {}", mismatched.join(", "), det.detail)
    };

    let mut unexpected = Vec::new();
    for line in &lines {
        let budget = BUDGETS[line.criterion - 1];
        let secs = line.elapsed.as_secs_f64();
        let status = if line.pass { "PASS" } else { "FAIL" };
        let note = if secs > budget as f64 { " (over budget)" } else { "" };
        println!(
            "criterion {:>2} [{}]: {status} in {secs:.1}s of {budget}s{note}: {}",
            line.criterion,
            names[line.criterion - 1],
            line.detail
        );
        if line.pass == KNOWN_FAILING.contains(&line.criterion) {
            unexpected.push(line.criterion);
        }
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    if !unexpected.is_empty() {
        eprintln!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
