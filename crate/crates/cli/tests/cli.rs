use std::path::PathBuf;
use std::process::{Command, Output};

fn case(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(name)
        .display()
        .to_string()
}

fn swingbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swingbench"))
        .args(args)
        .env_remove("SWINGBENCH_THREADS")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn validate_prints_summary() {
    let out = swingbench(&["validate", &case("two_bus.toml")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("buses: 2 (1 generators, 1 loads, 0 zero-power)"));
    assert!(text.trim_end().ends_with("status: ok"));
}

#[test]
fn bad_option_values_exit_with_config_status() {
    let out = swingbench(&["noise", "--tau0", "-1", "--nodes", "1", "--amp", "1", "--T", "1", "--dt", "0.01"]);
    assert_eq!(out.status.code(), Some(2));
    let out = swingbench(&["--threads", "0", "validate", &case("two_bus.toml")]);
    assert_eq!(out.status.code(), Some(2));
    let out = swingbench(&["simulate", &case("two_bus.toml"), "--tau0", "1", "--T", "1", "--dt", "0.5"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn module_failures_print_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "version = 1\nbase_frequency_hz = = 50\n").unwrap();
    let out = swingbench(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: kind=syntax message=\""), "{err}");

    let out = swingbench(&["validate", "/nonexistent/grid.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = swingbench(&[
            "--threads",
            threads,
            "compare",
            &case("ten_bus.toml"),
            "--tau0-list",
            "0.5,2",
            "--members",
            "3",
            "--buses",
            "1,5",
            "--seed",
            "11",
            "--horizon-factor",
            "60",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read_to_string(&path).unwrap()
    };
    // The echoed arguments carry the output path and thread count; everything else must match.
    let body = |s: &str| s.lines().filter(|l| !l.starts_with("# argv")).collect::<Vec<_>>().join("\n");
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    assert_eq!(body(&a), body(&b));
    let c = run("c.csv", "2");
    assert_eq!(body(&a), body(&c));
    let rows: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 4);
    assert!(rows[0].starts_with("tau0,bus,"));
}

#[test]
fn short_horizon_compare_warns() {
    let out = swingbench(&[
        "compare",
        &case("two_bus.toml"),
        "--tau0-list",
        "1",
        "--members",
        "1",
        "--T",
        "2",
        "--buses",
        "all",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("warning: tau0 = 1: horizon 2 s is shorter than 50 tau0"), "{err}");
    assert!(err.contains("fewer than two members"), "{err}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# warning: ")));
}

#[test]
fn noise_output_is_self_describing() {
    let out = swingbench(&[
        "noise", "--tau0", "1", "--nodes", "3,4", "--amp", "0.5", "--seed", "2", "--T", "1", "--dt", "0.1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# swingbench "));
    assert!(text.contains("# argv: swingbench noise --tau0 1 --nodes 3,4"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "time,bus,value");
    assert_eq!(rows.len(), 1 + 2 * 11);
}

#[test]
fn pipeline_commands_run_on_bundled_case() {
    let grid = case("ten_bus.toml");
    for args in [
        vec!["steadystate", grid.as_str()],
        vec!["spectrum", grid.as_str(), "--modes", "2", "--tau0", "1"],
        vec!["rank", grid.as_str(), "--tau0", "10"],
        vec!["simulate", grid.as_str(), "--tau0", "1", "--T", "2", "--model", "modal", "--record-stride", "10"],
        vec!["simulate", grid.as_str(), "--tau0", "1", "--T", "1", "--model", "nonlinear", "--scheme", "realistic"],
    ] {
        let out = swingbench(&args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.lines().filter(|l| !l.starts_with('#')).count() > 1, "{args:?}");
    }
}
