//! Exit codes, output precedence and file schemas of the `cpmg` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cpmg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmg")).args(args).current_dir(cwd).env_remove("CPMG_OUT_DIR").output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn cycle_prints_rotation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cpmg(&["cycle", "--omega0", "0", "--omega1", "1", "--te-ratio", "15"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["effective_rotation"]["alpha"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(v["energy_levels"]["zero"].as_f64(), Some(0.0));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cpmg(&["scenario", "no-such-scenario"], tmp.path()).status.code(), Some(2));
    assert_eq!(cpmg(&["cycle", "--te-ratio", "0.5"], tmp.path()).status.code(), Some(2));
    assert_eq!(cpmg(&["frobnicate"], tmp.path()).status.code(), Some(2));
    let bad = write_config(tmp.path(), "[harmonic]\namplitud = 1.4\n");
    let out = cpmg(&["--config", &bad, "scenario", "harmonic"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("amplitud"));
    let missing = tmp.path().join("absent.toml");
    assert_eq!(cpmg(&["--config", missing.to_str().unwrap(), "cycle"], tmp.path()).status.code(), Some(2));
    assert_eq!(cpmg(&["simulate", "--te", "15"], tmp.path()).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = cpmg(&["--out", blocker.join("sub").to_str().unwrap(), "simulate", "--te", "15", "--echoes", "5", "--ramp", "1e-3"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_echoes_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let out = cpmg(&["--out", dir.to_str().unwrap(), "simulate", "--te", "15", "--echoes", "20", "--ramp", "1e-3"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.join("echoes.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("echo_index,tau,omega0_norm,Mx,My,Mz"));
    assert_eq!(lines.count(), 21);
    let m = manifest(&dir);
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    assert_eq!(outputs[0]["name"], "echoes.csv");
    assert_eq!(outputs[0]["bytes"].as_u64(), Some(text.len() as u64));
    assert_eq!(outputs[0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["config"]["timing"]["echo_count"].as_u64(), Some(20));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["simulate", "--te", "15", "--echoes", "3", "--ramp", "1e-3"];
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpmg"));
        cmd.args(extra).args(args).current_dir(tmp.path()).env_remove("CPMG_OUT_DIR");
        if let Some(e) = env {
            cmd.env("CPMG_OUT_DIR", e);
        }
        assert!(cmd.status().unwrap().success());
    };
    run(&[], None);
    assert!(tmp.path().join("cpmg-out/echoes.csv").exists());
    run(&[], Some("from-env"));
    assert!(tmp.path().join("from-env/echoes.csv").exists());
    let cfg = write_config(tmp.path(), "output_dir = \"from-config\"\n");
    run(&["--config", &cfg], Some("from-env-2"));
    assert!(tmp.path().join("from-config/echoes.csv").exists());
    assert!(!tmp.path().join("from-env-2").exists());
    run(&["--config", &cfg, "--out", "from-flag"], Some("from-env-2"));
    assert!(tmp.path().join("from-flag/echoes.csv").exists());
}

#[test]
fn decompose_writes_mode_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let out = cpmg(&["--out", dir.to_str().unwrap(), "decompose", "--te", "8", "--echoes", "50", "--ramp", "1e-3", "--continuous"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let header = |name: &str| fs::read_to_string(dir.join(name)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header("modes.csv"), "cycle,tau,omega0_norm,a0,cp_magnitude,adiabaticity");
    assert_eq!(header("continuous_modes.csv"), "cycle,tau,omega0_norm,a0,cp_magnitude,adiabaticity");
    assert_eq!(header("first_order.csv"), "tau,omega0_norm,Mx,My_abs,inv_adiabaticity");
    let names: Vec<String> = manifest(&dir)["outputs"].as_array().unwrap().iter().map(|o| o["name"].as_str().unwrap().to_string()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 5);
}

#[test]
fn one_cell_sweep_matches_point_query() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[sweep]\nquantity = \"adiabaticity\"\nte_ratio = 15\nramp = 1e-3\nx = { min = 1.3, max = 1.3, count = 1 }\n");
    let dir = tmp.path().join("o");
    let out = cpmg(&["--config", &cfg, "--out", dir.to_str().unwrap(), "sweep"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("sweep_adiabaticity.csv")).unwrap();
    let row = text.lines().find(|l| !l.starts_with('#') && !l.starts_with("omega0")).unwrap();
    let swept: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    let point = cpmg(&["adiabaticity", "--omega0", "1.3", "--te-ratio", "15", "--ramp0", "1e-3"], tmp.path());
    let v: Value = serde_json::from_slice(&point.stdout).unwrap();
    assert_eq!(swept, v["adiabaticity"].as_f64().unwrap());
}

#[test]
fn scenario_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[harmonic]\nperiods = [300.2]\nrepeats = 1\n");
    for d in ["a", "b"] {
        let out = cpmg(&["--config", &cfg, "--out", d, "scenario", "harmonic"], tmp.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["outputs"], mb["outputs"]);
    for o in ma["outputs"].as_array().unwrap() {
        let name = o["name"].as_str().unwrap();
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}
