use kalikow_cli::presets::{list_presets, preset_source};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn kalikow(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kalikow"));
    cmd.args(args).env_remove("KALIKOW_SEED");
    if let Some(s) = seed_env {
        cmd.env("KALIKOW_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name).join("report.json")).unwrap()).unwrap()
}

const WALK: &str = r#"
name = "walk"
seed = 9

[base]
type = "markov"
alphabet = 2

[cocycle]
type = "simple_walk"
d = 1

[experiment]
kind = "maxineq"
m = 256
L = [0.5, 1.0, 1.5]
M = 3000

[[assert]]
metric = "rows/*/frequency"
op = "le"
value = 1.0
"#;

#[test]
fn presets_subcommand_lists_in_order() {
    let out = kalikow(&["presets"], None);
    assert!(out.status.success());
    let listed: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(listed, list_presets());
    assert_eq!(listed.len(), 15);
    let shown = kalikow(&["presets", "anosov_clt"], None);
    assert_eq!(String::from_utf8(shown.stdout).unwrap(), preset_source("anosov_clt").unwrap());
}

#[test]
fn missing_section_is_config_invalid_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let text = WALK.replace("[cocycle]\ntype = \"simple_walk\"\nd = 1\n", "");
    let cfg = write(dir.path(), "c.toml", &text);
    let outdir = dir.path().join("out");
    let out = kalikow(&["maxineq", "--config", &cfg, "--outdir", outdir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[cocycle]"));
    assert!(!outdir.exists());
}

#[test]
fn invalid_inputs_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("out");
    let od = outdir.to_str().unwrap();
    let cases = [
        WALK.replace("m = 256", "m = 256\nwidth = 3"),
        WALK.replace("metric = \"rows/*/frequency\"", "metric = \"rows/*/missing\""),
        WALK.replace("alphabet = 2", "alphabet = 3"),
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.toml"), text);
        let out = kalikow(&["maxineq", "--config", &cfg, "--outdir", od], None);
        assert_eq!(out.status.code(), Some(64), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let cfg = write(dir.path(), "ok.toml", WALK);
    assert_eq!(kalikow(&["clt", "--config", &cfg, "--outdir", od], None).status.code(), Some(64));
    assert_eq!(kalikow(&["maxineq", "--config", &cfg, "--outdir", od], Some("seven")).status.code(), Some(64));
    assert_eq!(kalikow(&["maxineq", "--config", &cfg, "--outdir", od, "--workers", "0"], None).status.code(), Some(64));
    assert!(!outdir.exists());
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", WALK);
    let mut reports = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let od = dir.path().join(format!("out{i}"));
        let out = kalikow(&["maxineq", "--config", &cfg, "--outdir", od.to_str().unwrap(), "--workers", workers], None);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report = std::fs::read(od.join("walk/report.json")).unwrap();
        let csv = std::fs::read(od.join("walk/raw.csv")).unwrap();
        reports.push((report, csv));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn seed_precedence_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", WALK);
    let run = |extra: &[&str], env: Option<&str>, sub: &str| {
        let od = dir.path().join(sub);
        let mut args = vec!["maxineq", "--config", &cfg, "--outdir", od.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(kalikow(&args, env).status.success());
        read_report(&od, "walk")
    };
    let file = run(&[], None, "a");
    let env = run(&[], Some("21"), "b");
    let flag = run(&["--seed", "33"], Some("21"), "c");
    assert_eq!(file["seed"], 9);
    assert_eq!(env["seed"], 21);
    assert_eq!(flag["seed"], 33);
    assert_eq!(env["config"]["seed"], 21);
    assert_ne!(file["config_hash"], env["config_hash"]);
    assert_ne!(file["result"], env["result"]);
    assert!(file["config"].get("workers").is_none());
}

#[test]
fn json_config_matches_toml() {
    let dir = tempfile::tempdir().unwrap();
    let toml_cfg = write(dir.path(), "c.toml", WALK);
    let parsed = kalikow_cli::config::parse_config(WALK, false).unwrap();
    let json_cfg = write(dir.path(), "c.json", &serde_json::to_string(&parsed).unwrap());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(kalikow(&["maxineq", "--config", &toml_cfg, "--outdir", a.to_str().unwrap()], None).status.success());
    assert!(kalikow(&["maxineq", "--config", &json_cfg, "--outdir", b.to_str().unwrap()], None).status.success());
    assert_eq!(std::fs::read(a.join("walk/report.json")).unwrap(), std::fs::read(b.join("walk/report.json")).unwrap());
}

#[test]
fn failed_threshold_exits_2_only_under_assert() {
    let dir = tempfile::tempdir().unwrap();
    let text = WALK.replace("op = \"le\"\nvalue = 1.0", "op = \"gt\"\nvalue = 1.0");
    let cfg = write(dir.path(), "c.toml", &text);
    let od = dir.path().join("out");
    let plain = kalikow(&["maxineq", "--config", &cfg, "--outdir", od.to_str().unwrap()], None);
    assert!(plain.status.success());
    assert_eq!(read_report(&od, "walk")["passed"], false);
    let strict = kalikow(&["maxineq", "--config", &cfg, "--outdir", od.to_str().unwrap(), "--assert"], None);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn arith_verbs_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cf.toml", "name = \"golden\"\nseed = 0\n[experiment]\nkind = \"cf\"\nalpha = 0.6180339887498949\ndepth = 6\n");
    let od = dir.path().join("out");
    let ods = od.to_str().unwrap();
    assert_eq!(kalikow(&["arith", "ostrowski", "--config", &cfg, "--outdir", ods], None).status.code(), Some(64));
    assert!(kalikow(&["arith", "cf", "--config", &cfg, "--outdir", ods], None).status.success());
    let report = read_report(&od, "golden");
    assert_eq!(report["command"], "arith");
    assert_eq!(report["result"]["partial_quotients"], serde_json::json!([1, 1, 1, 1, 1, 1]));
    assert_eq!(report["result"]["denominators"], serde_json::json!([1, 1, 2, 3, 5, 8, 13]));
    let csv = std::fs::read_to_string(od.join("golden/raw.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,a_k,p_k,q_k"));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn skew_orbit_headers() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "orbit"
seed = 4
[base]
type = "markov"
alphabet = 7
[fiber]
type = "toral_zd"
preset = "cartan_t4"
[cocycle]
type = "symbol"
values = [[0, 0, 0], [10, 0, 0], [-10, 0, 0], [0, 10, 0], [0, -10, 0], [0, 0, 10], [0, 0, -10]]
[experiment]
kind = "orbit"
N = 50
"#;
    let cfg = write(dir.path(), "o.toml", text);
    let od = dir.path().join("out");
    assert!(kalikow(&["skew", "orbit", "--config", &cfg, "--outdir", od.to_str().unwrap()], None).status.success());
    let csv = std::fs::read_to_string(od.join("orbit/raw.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,tau_1,tau_2,tau_3"));
    assert_eq!(lines.next(), Some("0,0,0,0"));
    assert_eq!(csv.lines().count(), 52);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').skip(1).map(|s| s.parse().unwrap()).collect();
    assert!(last.iter().all(|v| v % 10.0 == 0.0));

    let occ = text.replace("kind = \"orbit\"", "kind = \"occupation\"").replace("name = \"orbit\"", "name = \"occ\"");
    let cfg = write(dir.path(), "occ.toml", &occ);
    assert!(kalikow(&["skew", "--config", &cfg, "--outdir", od.to_str().unwrap()], None).status.success());
    let csv = std::fs::read_to_string(od.join("occ/raw.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t_1,t_2,t_3,weight"));
    let mass: f64 = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((mass - 50f64.sqrt()).abs() < 1e-9, "{mass}");
}

#[test]
fn anosov_preset_passes_under_assert() {
    let dir = tempfile::tempdir().unwrap();
    let od = dir.path().join("out");
    let out = kalikow(&["clt", "--preset", "anosov_clt", "--assert", "--outdir", od.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(&od, "anosov_clt");
    assert_eq!(report["passed"], true);
    assert_eq!(report["units"]["a_N"], "sqrt(N)");
    let csv = std::fs::read_to_string(od.join("anosov_clt/raw.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4001);
}

#[test]
fn fixtures_match_a_fresh_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let dir = tempfile::tempdir().unwrap();
    for name in ["anosov_clt", "decay_d3", "special_flow_deviation", "probe_dset"] {
        let out = kalikow(&["run", "--preset", name, "--outdir", dir.path().to_str().unwrap(), "--workers", "2"], None);
        assert!(out.status.success(), "{name}");
        for file in ["report.json", "raw.csv"] {
            let fresh = std::fs::read(dir.path().join(name).join(file)).unwrap();
            let shipped = std::fs::read(root.join(name).join(file)).unwrap();
            assert!(fresh == shipped, "fixtures/{name}/{file} is stale");
        }
    }
}
