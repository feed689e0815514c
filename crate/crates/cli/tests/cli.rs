//! End-to-end runs of the `coupling-lab` binary and the experiment runner.

use coupling_lab::config::ExperimentConfig;
use coupling_lab::presets::PRESETS;
use coupling_lab::runner::run_experiment;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coupling-lab"));
    c.env_remove("COUPLING_LAB_THREADS");
    c
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
name = "small"
kind = "vertical_tail"
seed = 11
n_paths = 400

[space]
base = "euclidean"
fiber = "line"

[sim]
dt = 0.01

[params]
a = 1.0
t_grid = [0.5, 1.0, 2.0]
"#;

#[test]
fn presets_lists_and_emits_loadable_configs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["presets", "--emit"]).arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), PRESETS.len());
    for p in PRESETS {
        assert!(stdout(&o).contains(p.name));
        let cfg = ExperimentConfig::load(&dir.path().join(format!("{}.toml", p.name))).unwrap();
        cfg.validate().unwrap();
    }
}

#[test]
fn every_preset_runs_end_to_end_at_reduced_size() {
    let dir = tempfile::tempdir().unwrap();
    for p in PRESETS {
        let mut cfg = p.config().unwrap();
        cfg.n_paths = 1000;
        let exp = cfg.validate().unwrap();
        let out = dir.path().join(p.name);
        let m = run_experiment(&exp, &out).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        assert_eq!(m.outputs.len(), 2);
        for f in &m.outputs {
            assert!(out.join(&f.path).is_file(), "{}: missing {}", p.name, f.path);
        }
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["name"], p.name);
        assert!(!m.assertions.is_empty(), "{} asserts nothing", p.name);
    }
}

fn run_small(dir: &Path, threads: &str) -> (Output, serde_json::Value) {
    let cfg = dir.join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.join(format!("out-{threads}"));
    let o = bin().env("COUPLING_LAB_THREADS", threads).arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    let m = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    (o, m)
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (o1, m1) = run_small(dir.path(), "1");
    let (_, m2) = run_small(dir.path(), "3");
    assert!(o1.status.code().is_some_and(|c| c <= 1), "{}", stderr(&o1));
    assert_eq!(m1["outputs"], m2["outputs"]);
    assert_eq!(m1["summary"], m2["summary"]);

    let csv = std::fs::read_to_string(dir.path().join("out-1/small.csv")).unwrap();
    let mut lines = csv.split("\r\n");
    assert_eq!(lines.next(), Some("t,survival,stderr,exact,lower_bound,upper_bound"));
    assert_eq!(csv.matches("\r\n").count(), 4);
}

#[test]
fn manifest_keys_keep_declaration_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.code().is_some_and(|c| c <= 1), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("missing {k}"));
    let order = ["name", "anchor", "code_version", "config", "wall_time_seconds", "outputs", "summary", "assertions"];
    assert!(order.windows(2).all(|w| pos(w[0]) < pos(w[1])), "{text}");
}

#[test]
fn invalid_configs_are_rejected_with_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (SMALL.replace("a = 1.0", "a = -1.0"), "params.a"),
        (SMALL.replace("dt = 0.01", "dt = 0.0"), "sim"),
        (SMALL.replace("seed = 11", "seed = 11\nbogus = 1"), "bogus"),
        (SMALL.replace("[0.5, 1.0, 2.0]", "[2.0, 1.0]"), "params.t_grid"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("bad{i}.toml"));
        std::fs::write(&cfg, text).unwrap();
        let o = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains(field), "case {i}: {}", stderr(&o));
    }
    let o = bin().args(["run", "--preset", "no-such-preset"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_an_error() {
    let o = bin().env("COUPLING_LAB_THREADS", "0").arg("presets").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("COUPLING_LAB_THREADS"));
}

#[test]
fn plot_renders_csv_to_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tail.csv");
    std::fs::write(&csv, "t,survival,exact\r\n1,0.5,0.49\r\n2,0.25,0.26\r\n4,0.1,\r\n").unwrap();
    for logy in [false, true] {
        let svg = dir.path().join(format!("tail-{logy}.svg"));
        let mut c = bin();
        c.arg("plot").arg(&csv).arg("--out").arg(&svg);
        if logy {
            c.arg("--logy");
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg") && text.contains("survival") && text.contains("exact"));
        assert_eq!(text.contains("1e-1"), logy);
    }
}

#[test]
fn verify_runs_a_single_fast_criterion() {
    let o = bin().args(["verify", "--criterion", "12"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("[PASS] 12"));
    let o = bin().args(["verify", "--criterion", "99"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
