mod common;

use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use common::*;
use toda_lab::lattice::{KvMState, LatticeState};
use toda_lab::spectral::ScatteringData;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toda-lab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn soliton_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path(), "s");
    ok(&["soliton", "--k", "0.5", "--gamma", "1", "--window", "-100:100", "--out", &out]);
    let state = LatticeState::read(tmp.path().join("s/state.json")).unwrap();
    assert_eq!((state.n_min(), state.n_max()), (-100, 100));

    let m = manifest(&tmp.path().join("s"));
    assert_eq!(m["command"], "soliton");
    assert_eq!(m["schema_version"], 1);
    let bytes = std::fs::read(tmp.path().join("s/state.json")).unwrap();
    assert_eq!(m["outputs"]["state.json"], hex::encode(Sha256::digest(&bytes)));
    assert_eq!(m["parameters"]["window"], "-100:100");
}

#[test]
fn identical_runs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        ok(&["soliton", "--k", "0.5,-0.3", "--window", "-60:60", "--out", &path(tmp.path(), name)]);
    }
    let read = |n: &str| std::fs::read(tmp.path().join(n).join("state.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(manifest(&tmp.path().join("a"))["outputs"], manifest(&tmp.path().join("b"))["outputs"]);
}

#[test]
fn constant_state_gives_trivial_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("const.json");
    std::fs::write(&input, LatticeState::constant(-30, 61, 0.5, 0.0, 0.0).unwrap().to_json()).unwrap();
    let stdout = ok(&["theorem-demo", "--state", input.to_str().unwrap(), "--r", "0", "--C", "10", "--delta", "0.1", "--out", &path(tmp.path(), "t")]);
    assert!(stdout.contains("(i)"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("t/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "i");
    let csv = std::fs::read_to_string(tmp.path().join("t/decay.csv")).unwrap();
    assert!(csv.starts_with("M,tail_t0,tail_t1,bound\n"));
}

#[test]
fn usage_and_domain_errors() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["soliton", "--k", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["--version"]).status.code(), Some(0));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "n_min": 0, "a": [0.5, -1.0], "b": [0, 0], "a0": 0.5, "b0": 0, "t": 0}"#).unwrap();
    let out_dir = tmp.path().join("never");
    let out = run(&["evolve", "--state", bad.to_str().unwrap(), "--t", "1", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "partial output written");

    // |k| ≥ 1 is a domain error
    let out = run(&["soliton", "--k", "1.5", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());

    let out = Command::new(env!("CARGO_BIN_EXE_toda-lab"))
        .args(["soliton", "--k", "0.5", "--out", out_dir.to_str().unwrap()])
        .env("TODA_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scattering_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |n: &str| path(tmp.path(), n);
    std::fs::write(tmp.path().join("g.json"), gaussian_state(0.05, 0.5, -80, 80).to_json()).unwrap();
    ok(&["evolve", "--state", &p("g.json"), "--r", "1", "--t", "0.5", "--out", &p("evo")]);
    let conservation = std::fs::read_to_string(tmp.path().join("evo/conservation.csv")).unwrap();
    assert!(conservation.starts_with("t,tr1,tr2,tr3,tr4,min_a,tail_margin\n"));
    ok(&["scatter", "--state", &p("g.json"), "--grid", "64", "--truncation", "2001", "--out", &p("sd0")]);
    ok(&["scatter", "--state", &p("evo/state.json"), "--grid", "64", "--truncation", "2001", "--out", &p("sd1")]);
    let sd = ScatteringData::read(tmp.path().join("sd0/scattering.json")).unwrap();
    assert_eq!(sd.k_grid.len(), 64);

    ok(&["dispersion", "fit", "--sd0", &p("sd0/scattering.json"), "--sd1", &p("sd1/scattering.json"), "--r", "1", "--out", &p("fit")]);
    let law: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fit/law.json")).unwrap()).unwrap();
    assert!((law["d"]["2"].as_f64().unwrap() - 0.5).abs() < 1e-6);

    let stdout = ok(&["witness", "growth", "--sd", &p("sd0/scattering.json"), "--law", &p("fit/law.json"), "--out", &p("w")]);
    assert!(stdout.contains("verdict"));
    assert!(tmp.path().join("w/growth.csv").exists() && tmp.path().join("w/growth_report.txt").exists());
    let inputs = manifest(&tmp.path().join("w"))["inputs"].as_object().unwrap().len();
    assert_eq!(inputs, 2);

    // unnormalized backgrounds need an explicit --normalize
    let shifted = LatticeState::from_fn(-20, 20, 1.0, 0.3, 0.0, |n| (1.0 + 0.1 * (-(n * n) as f64).exp(), 0.3)).unwrap();
    std::fs::write(tmp.path().join("shifted.json"), shifted.to_json()).unwrap();
    assert_eq!(run(&["scatter", "--state", &p("shifted.json"), "--out", &p("x")]).status.code(), Some(1));
    ok(&["scatter", "--state", &p("shifted.json"), "--normalize", "--grid", "16", "--out", &p("x")]);
}

#[test]
fn hierarchy_and_kvm_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |n: &str| path(tmp.path(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    std::fs::write(tmp.path().join("s.json"), random_compact(&mut rng, -20, 20, (-3, 3), 0.2).to_json()).unwrap();
    ok(&["hierarchy", "show", "--state", &p("s.json"), "--r", "2", "--c", "0.5,-1", "--range", "-5:5", "--out", &p("h")]);
    let fields = std::fs::read_to_string(tmp.path().join("h/fields.csv")).unwrap();
    assert_eq!(fields.lines().next().unwrap(), "n,g_0,g_1,g_2,g_3,h_0,h_1,h_2,h_3");
    assert_eq!(fields.lines().count(), 12);
    assert_eq!(run(&["hierarchy", "show", "--state", &p("s.json"), "--r", "2", "--c", "0.5", "--out", &p("h2")]).status.code(), Some(1));

    std::fs::write(tmp.path().join("k.json"), random_kvm(&mut rng, 10, 20, 0.6).to_json()).unwrap();
    ok(&["kvm", "evolve", "--state", &p("k.json"), "--t", "0.5", "--out", &p("k")]);
    let k = KvMState::from_json(&std::fs::read_to_string(tmp.path().join("k/kvm_state.json")).unwrap()).unwrap();
    assert_eq!(k.t(), 0.5);
}
