use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redundancy"))
        .args(args)
        .env("REDUNDANCY_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn threshold_json() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["threshold", "--dist", "exponential", "--k", "2", "--n", "20", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t = v["threshold"].as_f64().unwrap();
    assert!((t - 0.333).abs() < 0.01, "{t}");
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("threshold/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["subcommand"], "threshold");
    assert_eq!(manifest["parameters"]["controls"]["n_requests"], 200_000);
}

#[test]
fn unstable_load_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["simulate", "--dist", "pareto:alpha=2.1", "--k", "2", "--load", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--load"), "{}", stderr(&o));
}

#[test]
fn flag_errors_name_the_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bogus"));
    let o = run(tmp.path(), &["simulate", "--dist", "gamma:shape=2", "--load", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--dist"));
    let o = run(tmp.path(), &["variance-sweep", "--preset", "fig-md1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--preset"));
    let o = run(tmp.path(), &["simulate", "--load", "0.2", "--loads", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["dns", "analyze", "--trials", "/nonexistent/trials.csv"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn cost_benefit_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["cost-benefit"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let row = csv.lines().find(|l| l.contains("common customer")).unwrap();
    assert!(row.ends_with(",3.68,16.62,0.53"), "{row}");
    assert_eq!(fs::read_to_string(tmp.path().join("cost-benefit/cost_benefit.csv")).unwrap(), csv);

    let plans = tmp.path().join("plans.json");
    fs::write(&plans, r#"[{"name": "x", "cost_per_gb": 1.0}]"#).unwrap();
    let o = run(tmp.path(), &["cost-benefit", "--plans", plans.to_str().unwrap()]);
    assert_eq!(stdout(&o).lines().count(), 2);
    fs::write(&plans, r#"[{"name": "x", "cost_per_gb": -1.0}]"#).unwrap();
    let o = run(tmp.path(), &["cost-benefit", "--plans", plans.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--dist", "deterministic", "--k", "2", "--load", "0.3", "--requests", "20000",
        "--replications", "3", "--seed", "5",
    ];
    assert!(run(a.path(), &args).status.success());
    let mut with_jobs = args.to_vec();
    with_jobs.extend(["--jobs", "1"]);
    assert!(run(b.path(), &with_jobs).status.success());
    let ta = tree(&a.path().join("simulate"));
    let tb = tree(&b.path().join("simulate"));
    let names: Vec<_> = ta.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["cdf.csv", "manifest.json", "result.json"]);
    // Results do not depend on the worker count; only the manifest's argv does.
    for (x, y) in ta.iter().zip(&tb) {
        if x.0 != "manifest.json" {
            assert_eq!(x, y, "{}", x.0);
        }
    }
    let c = tempfile::tempdir().unwrap();
    assert!(run(c.path(), &args).status.success());
    assert_eq!(ta, tree(&c.path().join("simulate")));
}

#[test]
fn config_file_fills_missing_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"dist": "deterministic", "loads": [0.1, 0.2], "requests": 10000, "replications": 3}"#).unwrap();
    let o = run(tmp.path(), &["--config", cfg.to_str().unwrap(), "simulate", "--requests", "20000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("load_frac,mean_base,mean_base_hw,mean_rep"));
    assert_eq!(csv.lines().count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("simulate/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["requests"], 20000);
    assert_eq!(manifest["parameters"]["replications"], 3);
    assert_eq!(manifest["parameters"]["system"]["dist"], "deterministic");
}

#[test]
fn analytic_and_handshake() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["analytic", "--scv", "1", "--load", "0.2", "--mean-base", "1.5", "--overhead", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["geometric"][0]["threshold"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((v["at_load"]["mm1_base"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    assert_eq!(v["overhead_bound"]["verdict"], "CannotHelp");

    let o = run(tmp.path(), &["tcp-handshake", "--rtt-ms", "100"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["first_order_saving"].as_f64().unwrap() - 25.83).abs() < 1e-9);
    assert_eq!(v["duplicated_dominates"], true);
    assert_eq!(v["quoted_p999_saving_ms"], 880.0);
}

#[test]
fn dns_analyze_replays_a_log() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("trials.csv");
    let mut text = String::from("timestamp,name,strategy,latency_ms,lost\n");
    for i in 0..10 {
        text.push_str(&format!("{i},a.example,single:0,{},false\n", 100 + i));
        text.push_str(&format!("{i},a.example,parallel:1,{},false\n", 100 + i));
        text.push_str(&format!("{i},a.example,parallel:2,{},false\n", 60 + i));
    }
    fs::write(&log, text).unwrap();
    let o = run(tmp.path(), &["dns", "analyze", "--trials", log.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["strategies"].as_array().unwrap().len(), 3);
    let m = &v["marginal"][0];
    assert_eq!(m["m"], 2);
    assert!((m["saved_ms"].as_f64().unwrap() - 40.0).abs() < 1e-9);
    let table = fs::read_to_string(tmp.path().join("dns-analyze/strategies.csv")).unwrap();
    assert!(table.starts_with("strategy,trials,lost,mean_ms"));
}

#[test]
fn help_lists_units() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["simulate", "--help"]);
    let h = stdout(&o);
    assert!(h.contains("--load") && h.contains("mean service times"));
    let o = run(tmp.path(), &["dns", "campaign", "--help"]);
    let h = stdout(&o);
    assert!(h.contains("--gap-ms") && h.contains("ms"));
}
