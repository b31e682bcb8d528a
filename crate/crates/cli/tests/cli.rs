//! End-to-end runs of the `dms` binary over the shipped configs.
//!
//! Outputs are compared against `tests/golden/<config>/` at 1e-9 relative.
//! Set `DMS_BLESS=1` to rewrite the goldens from the current build.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const REL_TOL: f64 = 1e-9;
const ABS_FLOOR: f64 = 1e-300;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    root().join("configs").join(format!("{name}.json"))
}

fn dms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dms")).args(args).output().expect("spawn dms")
}

fn run_config(name: &str, command: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = config(name);
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dms(&args)
}

fn experiment(name: &str) -> String {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(config(name)).unwrap()).unwrap();
    doc["experiment"].as_str().unwrap().to_string()
}

fn outputs(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    names.sort();
    names
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(ABS_FLOOR) || (a.is_nan() && b.is_nan())
}

fn compare_csv(file: &str, got: &str, want: &str) {
    let data = |s: &str| -> (Vec<String>, Vec<Vec<f64>>) {
        let mut lines = s.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
        let rows = lines.map(|l| l.split(',').map(|x| x.trim().parse::<f64>().unwrap()).collect()).collect();
        (header, rows)
    };
    let (gh, gr) = data(got);
    let (wh, wr) = data(want);
    assert_eq!(gh, wh, "{file}: header");
    assert_eq!(gr.len(), wr.len(), "{file}: row count");
    for (i, (g, w)) in gr.iter().zip(&wr).enumerate() {
        assert_eq!(g.len(), w.len(), "{file} row {i}: width");
        for (j, (a, b)) in g.iter().zip(w).enumerate() {
            assert!(close(*a, *b), "{file} row {i} column {}: {a:e} vs golden {b:e}", gh[j]);
        }
    }
}

fn compare_json(file: &str, path: &str, got: &Value, want: &Value) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!(close(a, b), "{file} {path}: {a:e} vs golden {b:e}");
        }
        (Value::Object(a), Value::Object(b)) => {
            assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>(), "{file} {path}: keys");
            for (k, v) in a {
                compare_json(file, &format!("{path}.{k}"), v, &b[k]);
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{file} {path}: length");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                compare_json(file, &format!("{path}[{i}]"), x, y);
            }
        }
        // free-text fields embed formatted numbers; the structured fields carry the values
        (Value::String(_), Value::String(_)) if path.ends_with("worst_case") => {}
        _ => assert_eq!(got, want, "{file} {path}"),
    }
}

fn golden(name: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(name, &experiment(name), dir.path(), &[]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.code().is_some_and(|c| c < 2), "{name}: {stderr}");
    let gold = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("DMS_BLESS").is_some() || !gold.exists() {
        std::fs::create_dir_all(&gold).unwrap();
        for f in outputs(dir.path()) {
            std::fs::copy(dir.path().join(&f), gold.join(&f)).unwrap();
        }
        eprintln!("{name}: goldens written to {}", gold.display());
        return;
    }
    assert_eq!(outputs(dir.path()), outputs(&gold), "{name}: output files");
    for f in outputs(&gold) {
        let got = std::fs::read_to_string(dir.path().join(&f)).unwrap();
        let want = std::fs::read_to_string(gold.join(&f)).unwrap();
        if f.ends_with(".json") {
            compare_json(&f, "", &serde_json::from_str(&got).unwrap(), &serde_json::from_str(&want).unwrap());
        } else {
            compare_csv(&f, &got, &want);
        }
    }
}

#[test]
fn golden_fig1_iv() {
    golden("fig1_iv");
}

#[test]
fn golden_fig1_iv_monte_carlo() {
    golden("fig1_iv_monte_carlo");
}

#[test]
fn golden_fig2_bridge_pop() {
    golden("fig2_bridge_pop");
}

#[test]
fn golden_fig3_steady_state() {
    golden("fig3_steady_state");
}

#[test]
fn golden_fig4_step_response() {
    golden("fig4_step_response");
}

#[test]
fn golden_fig5_sine_response() {
    golden("fig5_sine_response");
}

#[test]
fn golden_dt_filter() {
    golden("dt_filter");
}

#[test]
fn golden_verify() {
    golden("verify");
}

#[test]
fn reruns_are_byte_identical() {
    for name in ["fig1_iv_monte_carlo", "dt_filter", "fig2_bridge_pop"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cmd = experiment(name);
        assert!(run_config(name, &cmd, a.path(), &["--threads", "1"]).status.success());
        assert!(run_config(name, &cmd, b.path(), &[]).status.success());
        for f in outputs(a.path()) {
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap();
            assert!(x == y, "{name}/{f} differs between runs");
        }
    }
}

#[test]
fn seed_flag_changes_random_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_config("dt_filter", "dt-filter", a.path(), &[]).status.success());
    assert!(run_config("dt_filter", "dt-filter", b.path(), &["--seed", "99"]).status.success());
    let read = |d: &Path| std::fs::read(d.join("dt_filter.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(b.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["signal"]["shape"]["seed"], 99);
}

#[test]
fn verify_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let pass = run_config("verify", "verify", dir.path(), &["--set", r#"checks=["lemma1_positivity","dt_step_vs_rk"]"#]);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));
    assert!(String::from_utf8_lossy(&pass.stdout).contains("lemma1_positivity"));
    let fail = run_config("verify", "verify", dir.path(), &["--set", r#"checks=["cor2_steady_state"]"#]);
    assert_eq!(fail.status.code(), Some(1));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["success"], false);
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("fig2_bridge_pop", "bridge-pop", dir.path(), &["--set", "grid.pionts=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pionts"));
    let out = run_config("fig2_bridge_pop", "bridge-pop", dir.path(), &["--set", "params.kapa=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kapa"));
}

#[test]
fn mismatched_experiment_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("fig2_bridge_pop", "iv-sweep", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bridge-pop"));
}

#[test]
fn manifest_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("fig3_steady_state", "steady-state", dir.path(), &["--set", "grid.points=11"]);
    assert!(out.status.success());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "steady-state");
    assert_eq!(m["success"], true);
    assert_eq!(m["overrides"][0], "grid.points=11");
    assert_eq!(m["config"]["grid"]["points"], 11);
    assert_eq!(m["outputs"][0]["file"], "steady_state.csv");
    assert_eq!(m["outputs"][0]["rows"], 11);
    assert!(m["config"]["params"].is_object());
}

#[test]
fn defaults_run_without_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dms(&["bridge-pop", "--out", dir.path().to_str().unwrap(), "--set", "grid.points=5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("bridge_pop.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
}
