//! End-to-end runs of the `rprof` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rprof_harness::output::{read_rows, RESULTS_HEADER};

fn rprof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rprof")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rprof(args);
    assert!(out.status.success(), "rprof {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn chain_run_writes_results_manifest_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "env = \"chain\"\nalgo = \"reinforce\"\nvariant = \"tp\"\nrounds = 50\nsteps_per_round = 100\nseeds = \"0..2\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    // The flag overrides the file's `rounds`.
    let stdout = ok(&["run", "--config", path(&config), "--rounds", "4", "--out", path(&out)]);
    assert!(stdout.starts_with("point,env,algo,variant,"));

    let text = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER);
    let rows = read_rows(&out.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 4);
    for r in &rows {
        assert!(r.oracle_j.is_some() && r.j_hat_mix.is_some() && r.lambda.is_some());
        assert!(r.wall_ms.is_none());
    }
    // env_steps is cumulative within a seed.
    for w in rows.windows(2).filter(|w| w[0].seed == w[1].seed) {
        assert!(w[1].env_steps > w[0].env_steps);
    }

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("code_version"));
    assert!(manifest.contains("rounds = 4"));
    assert_eq!(fs::read_to_string(out.join("failures.txt")).unwrap(), "");
}

#[test]
fn lookback_leaves_mix_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lb");
    ok(&["run", "--env", "cartpole", "--variant", "lb", "--rounds", "1", "--steps-per-round", "200", "--seeds", "3", "--out", path(&out)]);
    let text = fs::read_to_string(out.join("results.csv")).unwrap();
    let line = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields.len(), 13);
    assert_eq!(&fields[..5], ["3", "0", "cartpole", "reinforce", "lb"]);
    assert_eq!(fields[8], "", "j_hat_mix");
    assert_eq!(fields[10], "", "lambda");
    assert_eq!(fields[11], "", "oracle_j");
    assert_eq!(text.lines().count(), 2, "one round, one seed");
}

#[test]
fn sweep_report_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    ok(&[
        "sweep", "--env", "chain", "--rounds", "5", "--steps-per-round", "100", "--seeds", "0,1",
        "--grid-variants", "vanilla,lb,tp", "--out", path(&out),
    ]);
    for v in ["vanilla", "lb", "tp"] {
        assert!(out.join(format!("variant-{v}")).join("results.csv").is_file());
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert_eq!(ok(&["report", "--out", path(&out)]), summary);
    // Vanilla is its own baseline: zero reduction.
    let vanilla = summary.lines().find(|l| l.contains(",vanilla,")).unwrap();
    assert!(vanilla.ends_with(",0"), "{vanilla}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&["run", "--env", "cartpole", "--variant", "mu", "--beta", "2,3", "--rounds", "3", "--steps-per-round", "300", "--out", path(&out)]);
        fs::read(out.join("results.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn bad_inputs_fail_with_messages() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "evn = \"chain\"\n").unwrap();
    let out = rprof(&["run", "--config", path(&config)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("evn"));

    let out = rprof(&["run", "--env", "chain", "--algo", "ddpg", "--out", path(&dir.path().join("x"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("continuous"));

    let out = rprof(&["report", "--out", path(dir.path())]);
    assert!(!out.status.success());
}

#[test]
fn verify_subset() {
    let stdout = ok(&["verify", "--only", "2,6"]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("C2  PASS"));
    assert!(lines[1].starts_with("C6  PASS"));
}
