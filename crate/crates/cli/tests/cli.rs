use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sidepeg"));
    cmd.env_remove("SIDEPEG_OUT_DIR");
    cmd
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(format!("{name}.toml"))
}

fn run(name: &str, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(scenario(name))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn audit(log: &Path) -> Output {
    bin().arg("audit").arg(log).output().unwrap()
}

#[test]
fn run_then_audit_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("honest_baseline", dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("alpha"), "{stdout}");
    let log = dir.path().join("honest_baseline-seed1.jsonl");
    assert_eq!(audit(&log).status.code(), Some(0));
}

#[test]
fn tampered_amount_fails_audit() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run("honest_baseline", dir.path(), &[]).status.code(),
        Some(0)
    );
    let log = dir.path().join("honest_baseline-seed1.jsonl");
    let text = std::fs::read_to_string(&log).unwrap();
    let target = text
        .lines()
        .find(|l| l.contains("\"forward_transfer\""))
        .unwrap()
        .to_string();
    let tampered = target.replace("\"amount\":400", "\"amount\":401");
    assert_ne!(tampered, target);
    std::fs::write(&log, text.replacen(&target, &tampered, 1)).unwrap();
    let out = audit(&log);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatch"));
}

#[test]
fn empty_log_is_vacuously_clean() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.jsonl");
    std::fs::write(&log, "").unwrap();
    assert_eq!(audit(&log).status.code(), Some(0));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nseed = \"not a number\"\n").unwrap();
    let out = bin()
        .arg("run")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let out = bin()
        .arg("run")
        .arg(dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["run", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let garbage = dir.path().join("garbage.jsonl");
    std::fs::write(&garbage, "not json\n").unwrap();
    assert_eq!(audit(&garbage).status.code(), Some(1));
}

#[test]
fn fraud_scenario_reports_punishment() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("fraud_collusion", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row = stdout.lines().find(|l| l.starts_with("alpha")).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cols[5], "3", "{row}");
    assert_eq!(cols[6], "300", "{row}");
}

#[test]
fn same_seed_gives_identical_logs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run("mc_reorg", a.path(), &["--seed", "42"]);
    run("mc_reorg", b.path(), &["--seed", "42"]);
    let read = |d: &Path| std::fs::read(d.join("mc_reorg-seed42.jsonl")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .arg(scenario("total_corruption"))
        .env("SIDEPEG_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("total_corruption-seed5.jsonl").exists());
}

#[test]
fn describe_prints_derived_parameters() {
    let out = bin()
        .arg("describe")
        .arg(scenario("desk_scale"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("max certificate amount 250"), "{stdout}");
    assert!(stdout.contains("quorum 3"), "{stdout}");
}
