//! End-to-end checks of the `trottersim` binary: exit codes, file outputs,
//! and cache reuse across invocations.

use std::process::Command;

fn trottersim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trottersim"))
}

#[test]
fn simulate_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = trottersim()
        .args([
            "simulate",
            "--model",
            "a2a_ising",
            "--size",
            "2",
            "--tau",
            "0.2",
            "--signatures",
            "jz,pr",
            "--windows",
            "2",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("model,size,tau,signature,window,value"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn invalid_config_exits_one_with_itemized_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"model": "a2a_ising", "sizes": [2.0], "tau": {"min": 0.1, "max": 0.5, "count": 0, "spacing": "linear"}, "signatures": ["jz"]}"#,
    )
    .unwrap();
    let out = trottersim().arg("sweep").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("tau.count"), "stderr: {stderr}");
}

#[test]
fn unknown_recipe_exits_one_and_lists_available() {
    let out = trottersim().args(["recipe", "fig9_nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("fig5_ising"), "stderr: {stderr}");
}

#[test]
fn recipe_print_emits_valid_config_json() {
    let out = trottersim()
        .args(["recipe", "fig5_ising", "--print"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["model"], "a2a_ising");
    assert_eq!(json["signatures"][0], "chi2_rmt");
}

#[test]
fn partial_failure_exits_two_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("partial.json");
    // dim_c = 2 is too small for the Dicke PR basis, dim_c = 50 works
    std::fs::write(
        &config,
        r#"{"model": "dicke", "sizes": [1.0], "tau": {"min": 0.1, "max": 0.1, "count": 1, "spacing": "linear"},
            "signatures": ["pr"], "windows": [1.0], "dim_c_sweep": [2, 50]}"#,
    )
    .unwrap();
    let out = trottersim()
        .arg("sweep")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("failures.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2); // header + the surviving row
}

#[test]
fn second_run_reuses_the_cache_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{"model": "heisenberg", "sizes": [3.0], "tau": {"min": 0.1, "max": 0.3, "count": 2, "spacing": "linear"},
            "signatures": ["jz", "sim_fid"], "windows": [2.0]}"#,
    )
    .unwrap();
    let run = |workers: &str| {
        let out = trottersim()
            .arg("sweep")
            .arg(&config)
            .arg("--out")
            .arg(dir.path())
            .args(["--workers", workers])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            String::from_utf8(out.stdout).unwrap(),
            std::fs::read_to_string(dir.path().join("results.csv")).unwrap(),
        )
    };
    let (first_log, first_csv) = run("2");
    assert!(first_log.contains("(0 cached)"), "log: {first_log}");
    // worker count must not change the table; the rerun must be all cache
    let (second_log, second_csv) = run("1");
    assert_eq!(first_csv, second_csv);
    assert!(second_log.contains("4 rows (4 cached)"), "log: {second_log}");
}
