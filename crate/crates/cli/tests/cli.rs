use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn mapcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mapcap(&args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn control_reproduces_frechet_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("control", &scenario("fig2_alpha_pos.json"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plan = read_json(&dir.path().join("plan.json"));
    let m = &plan["steps"][0]["matrix"];
    let want = [[0.4125, 0.5875], [0.2518, 0.7482]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((m[i][j].as_f64().unwrap() - want[i][j]).abs() < 5e-5);
        }
    }
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["subcommand"], "control");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"][0], "plan.json");
}

#[test]
fn deterministic_bounds_report_empty_delay_tail() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("bounds", &scenario("deterministic.json"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&dir.path().join("bounds.json"))["delay_status"], "no_root");
    let csv = std::fs::read_to_string(dir.path().join("delay_bounds.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[1], cols[2]), ("0", "0"), "{line}");
    }
    let transient = std::fs::read_to_string(dir.path().join("transient_bounds.csv")).unwrap();
    for line in transient.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').skip(2).take(2).map(|c| c.parse().unwrap()).collect();
        assert!((cols[0] - 12000.0).abs() < 1e-2 && (cols[1] - 12000.0).abs() < 1e-2, "{line}");
    }
}

#[test]
fn validate_upper_bound_holds_on_shipped_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("validate", &scenario("fig2_alpha_pos.json"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("validation.json"));
    assert!(v["report"]["points_checked"].as_u64().unwrap() >= 10);
    assert_eq!(v["report"]["upper_violations"], 0);
    assert_eq!(v["upper_bound_holds"], true);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenario("fig2_alpha_neg.json");
    assert!(run("simulate", &cfg, a.path(), &["--threads", "1", "--seed", "99"]).status.success());
    assert!(run("simulate", &cfg, b.path(), &["--threads", "3", "--seed", "99"]).status.success());
    for f in ["transient.csv", "delay_empirical.csv", "backlog_empirical.csv", "simulation.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    assert_eq!(read_json(&a.path().join("manifest.json"))["seed"], 99);
}

#[test]
fn seed_changes_simulation() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenario("fig1_transient.json");
    assert!(run("simulate", &cfg, a.path(), &["--seed", "1"]).status.success());
    assert!(run("simulate", &cfg, b.path(), &["--seed", "2"]).status.success());
    let x = std::fs::read(a.path().join("transient.csv")).unwrap();
    let y = std::fs::read(b.path().join("transient.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn order_ranks_extreme_dependence() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("order", &scenario("order_extremes.json"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("order.json"));
    assert_eq!(v["verdict"], "ALeB");
    let cx = std::fs::read_to_string(dir.path().join("cx.csv")).unwrap();
    assert_eq!(cx.lines().next(), Some("a,E_A,E_B"));
    assert_eq!(cx.lines().count(), 51);
}

#[test]
fn gaussian_spatial_scenarios_simulate_with_expected_lag1_sign() {
    for (name, negative) in [("fig3_gaussian_negative.json", true), ("fig3_gaussian_positive.json", false)] {
        let dir = tempfile::tempdir().unwrap();
        let out = run("simulate", &scenario(name), dir.path(), &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v = read_json(&dir.path().join("simulation.json"));
        let rho = v["lag1"]["rho"].as_f64().unwrap();
        let se = v["lag1"]["std_error"].as_f64().unwrap();
        assert_eq!(rho < 0.0, negative, "{name}: rho {rho}");
        assert!(rho.abs() > 3.0 * se, "{name}: rho {rho} se {se}");

        let out = run("bounds", &scenario(name), dir.path(), &[]);
        assert_eq!(out.status.code(), Some(2));
    }
}

#[test]
fn every_shipped_scenario_parses() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let out_dir = tempfile::tempdir().unwrap();
        let out = run("simulate", &path, out_dir.path(), &[]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        count += 1;
    }
    assert!(count >= 5);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let snr = r#""bandwidth": 20000, "snr": [[1, 1], [1, 1]]"#;
    let cases = [
        (
            "bounds",
            format!(r#"{{"model": {{"kind": "chain", "transitions": [[0.5, 0.5], [0.5, 0.5]], {snr}}}, "lamda": 1}}"#),
            2,
        ),
        (
            "simulate",
            format!(r#"{{"model": {{"kind": "chain", "transitions": [[0.5, 0.5], [0.5, 0.5]], {snr}}}, "simulation": {{"horizon": "long"}}}}"#),
            2,
        ),
        (
            "control",
            format!(r#"{{"model": {{"kind": "copula_plan", "marginal": [1.0, 0.0], "copulas": [{{"family": "frechet", "alpha": 0.5}}], {snr}}}}}"#),
            3,
        ),
        (
            "bounds",
            format!(r#"{{"model": {{"kind": "chain", "transitions": [[0.5, 0.5], [0.5, 0.5]], {snr}}}, "lambda": 1e6}}"#),
            4,
        ),
        (
            "bounds",
            format!(r#"{{"model": {{"kind": "chain", "transitions": [[1, 0], [0, 1]], {snr}}}}}"#),
            5,
        ),
    ];
    for (sub, text, code) in cases {
        let cfg = write_config(dir.path(), &text);
        let out = run(sub, &cfg, &out_dir, &[]);
        assert_eq!(out.status.code(), Some(code), "{text}: {}", String::from_utf8_lossy(&out.stderr));
    }

    let cfg = write_config(
        dir.path(),
        &format!(r#"{{"model": {{"kind": "chain", "transitions": [[0.5, 0.5], [0.5, 0.5]], {snr}}}, "simulation": {{"horizon": "long"}}}}"#),
    );
    let err = String::from_utf8_lossy(&run("simulate", &cfg, &out_dir, &[]).stderr).to_string();
    assert!(err.contains("simulation.horizon"), "{err}");

    let missing = mapcap(&["bounds"]);
    assert_eq!(missing.status.code(), Some(2));
}
