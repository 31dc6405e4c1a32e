use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phonon_pulse_sim::output::{RunManifest, MANIFEST_NAME};
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phonon-pulse-sim"));
    cmd.env_remove("PPS_OUTPUT_DIR").env("RUST_LOG", "error");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn short_fig2(dir: &Path) -> Output {
    run(&[
        "run",
        "--preset",
        "paper-fig2",
        "--set",
        "integrator.grid.end=600",
        "--set",
        "integrator.grid.samples=31",
        "--output-dir",
        dir.to_str().unwrap(),
    ])
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {text}"))
}

#[test]
fn find_gn_prints_root() {
    let out = run(&["find-gn", "--n", "2"]);
    assert!(out.status.success());
    let g: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((g - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-9);

    let out = run(&["find-gn", "--n", "2", "--omega-m", "2"]);
    let g2: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((g2 - 2.0 * g).abs() < 1e-9);

    let out = run(&["find-gn", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cases = [
        "{ not json",
        r#"{"preset": "paper-fig2", "unknown_key": 1}"#,
        r#"{"preset": "paper-fig2", "params": {"kappa": -1}}"#,
        r#"{"preset": "paper-fig2", "hilbert": {"n_a": 3, "n_b": 15, "extra": 0}}"#,
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = tmp.path().join(format!("bad{i}.json"));
        fs::write(&path, text).unwrap();
        let out = run(&["run", "--config", path.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stderr_json(&out)["exit_code"], 2);
        assert!(!out_dir.exists(), "case {i} left outputs behind");
    }
    let out = run(&["run", "--preset", "paper-fig2", "--set", "params.nope=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = short_fig2(&blocker.join("sub"));
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn pure_evolve_outputs_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("fig2");
    let out = short_fig2(&dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir);
    for f in &m.outputs {
        assert!(dir.join(f).is_file(), "{f}");
    }
    for f in ["pump.csv", "stokes.csv", "p_0_0.csv", "p_0_1.csv", "p_0_2.csv", "p_1_0_disp.csv", "plot.py"] {
        assert!(m.outputs.iter().any(|o| o == f), "{f} missing from {:?}", m.outputs);
    }
    let csv = fs::read_to_string(dir.join("p_0_2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time [1/omega_m],p_0_2 [1]"));
    assert_eq!(lines.count(), 31);
    assert!(m.checks.iter().any(|c| c.name == "validity_margin"));
    assert_eq!(m.resolved_config["experiment"], "pure-evolve");
    assert_eq!(m.resolved_config["integrator"]["grid"]["end"], 600.0);
}

#[test]
fn reruns_and_manifest_echo_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |dir: &Path| {
        vec![
            "run".to_string(),
            "--preset".into(),
            "paper-fig4".into(),
            "--set".into(),
            "integrator.grid.end=4000".into(),
            "--set".into(),
            "integrator.grid.samples=41".into(),
            "--set".into(),
            "trajectories.base_seed=11".into(),
            "--output-dir".into(),
            dir.to_str().unwrap().into(),
        ]
    };
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for dir in [&a, &b] {
        let out = bin().args(args(dir)).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    // Re-run from the echoed configuration alone.
    let echoed = tmp.path().join("echo.json");
    fs::write(&echoed, serde_json::to_string(&manifest(&a).resolved_config).unwrap()).unwrap();
    let out = run(&["run", "--config", echoed.to_str().unwrap(), "--output-dir", c.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let outputs = manifest(&a).outputs;
    assert!(outputs.iter().any(|o| o == "jumps.csv"));
    for f in outputs.iter().filter(|f| f.ends_with(".csv")) {
        let reference = fs::read(a.join(f)).unwrap();
        assert_eq!(reference, fs::read(b.join(f)).unwrap(), "{f} differs between reruns");
        assert_eq!(reference, fs::read(c.join(f)).unwrap(), "{f} differs after manifest echo");
    }
    assert_eq!(manifest(&a).resolved_config, manifest(&c).resolved_config);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .env("PPS_OUTPUT_DIR", tmp.path())
        .args(["run", "--preset", "paper-fig2", "--set", "experiment=validity-check", "--set", "name=vc"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("vc"));
    let margin = m.results["validity_margin"].as_f64().unwrap();
    assert!((margin - 5.719).abs() < 1e-3, "{margin}");
    assert!(m.checks.iter().any(|c| c.name == "validity_margin" && format!("{:?}", c.status) == "Warn"));
}

#[test]
fn reproduce_rejects_unknown_figure() {
    let out = run(&["reproduce", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
}
