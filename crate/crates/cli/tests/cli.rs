use std::process::Command;

fn fpklab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpklab"))
}

#[test]
fn list_benchmarks_names_every_shipped_config() {
    let out = fpklab().arg("list-benchmarks").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["laplace_pair", "sine_fractional", "mc_absorbing", "time_changed_equation"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn passing_run_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpklab().args(["run", "laplace_pair", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn failing_checks_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.toml");
    std::fs::write(
        &cfg,
        r#"
name = "strict"
[[diagnostics.laplace_pair.measures]]
atoms = [[0.5, 1.0]]
[tolerances]
laplace_pair = 0.0
"#,
    )
    .unwrap();
    let out = fpklab().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL strict"));
}

#[test]
fn unknown_config_exits_two() {
    let out = fpklab().args(["run", "no_such_benchmark"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, threads) in dirs.iter().zip(["1", "4"]) {
        let out = fpklab().args(["run", "sine_fractional", "--threads", threads, "--out"]).arg(dir.path()).output().unwrap();
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read_to_string(d.path().join("report.json")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
}
