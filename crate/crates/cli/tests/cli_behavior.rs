//! Process-level behavior of the `fjsim` binary: exit codes, output
//! contracts, and error diagnostics for all three subcommands.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fjsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fjsim"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const UNSTABLE_SCENARIO: &str = r#"
[system]
n = 1
mu = 1.0

[[class]]
k = 1
lambda = 3.0

[sim]
jobs = 1000
replications = 1
"#;

// ====================================================================
// bounds
// ====================================================================

#[test]
fn bounds_prints_verdict_and_three_bound_columns() {
    let out = fjsim()
        .args(["bounds", "--config"])
        .arg(scenario("fig8_mu1over6.toml"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("stability: STABLE"), "{text}");
    for column in ["naive_lb", "lb", "ub"] {
        assert!(text.contains(column), "missing column {column}: {text}");
    }
    assert!(text.lines().filter(|l| l.trim_start().starts_with(['1', '2'])).count() >= 2);
}

#[test]
fn bounds_on_an_unstable_config_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unstable.toml");
    std::fs::write(&path, UNSTABLE_SCENARIO).unwrap();
    let out = fjsim().args(["bounds", "--config"]).arg(&path).output().unwrap();
    assert!(out.status.success(), "analysis of an unstable system is still an answer");
    assert!(stdout(&out).contains("stability: UNSTABLE"), "{}", stdout(&out));
}

#[test]
fn bounds_rejects_malformed_config_without_writing_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[system]\nn = 1\nmu = \"quick\"\n").unwrap();
    let csv = dir.path().join("bounds.csv");
    let out = fjsim()
        .args(["bounds", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(!out.status.success(), "malformed config must fail");
    assert!(stderr(&out).contains("line"), "diagnostic locates the error: {}", stderr(&out));
    assert!(!csv.exists(), "no output file on failure");
}

#[test]
fn bounds_policy_override_is_reflected_in_the_table() {
    let out = fjsim()
        .args(["bounds", "--config"])
        .arg(scenario("fig8_mu1over6.toml"))
        .args(["--policy", "pq"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("policy: pq"), "{}", stdout(&out));
}

// ====================================================================
// run
// ====================================================================

#[test]
fn run_smoke_writes_the_pinned_schema_and_sidecar_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("smoke.csv");
    let started = std::time::Instant::now();
    let out = fjsim()
        .args(["run", "--config"])
        .arg(scenario("smoke.toml"))
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    let elapsed = started.elapsed();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(elapsed.as_secs_f64() < 1.0, "smoke run took {elapsed:?}");

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_param,sweep_value,class_id,policy,mean_latency,ci95,p50,p95,p99,completed,\
         efficiency_bits_per_J,t_a,t_l,energy_J,lb,ub,naive_lb,seed,schema_version"
    );
    assert_eq!(lines.count(), 1, "one class, no sweep: one row");
    assert!(dir.path().join("smoke_storage.csv").exists(), "storage sidecar");
}

#[test]
fn run_without_out_streams_csv_to_stdout() {
    let out = fjsim()
        .args(["run", "--config"])
        .arg(scenario("smoke.toml"))
        .args(["--jobs", "200"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("sweep_param,"), "{}", stdout(&out));
}

#[test]
fn run_overrides_show_up_in_the_rows() {
    let out = fjsim()
        .args(["run", "--config"])
        .arg(scenario("smoke.toml"))
        .args(["--jobs", "200", "--seed", "9", "--policy", "npq", "--replications", "3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",npq,"), "{row}");
    assert!(row.ends_with(",9,1"), "seed then schema version: {row}");
    let completed: u64 = row.split(',').nth(9).unwrap().parse().unwrap();
    assert_eq!(completed, 600, "3 replications x 200 jobs");
}

#[test]
fn run_rejects_unstable_scenarios_without_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unstable.toml");
    std::fs::write(&path, UNSTABLE_SCENARIO).unwrap();
    let out = fjsim().args(["run", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unstable"), "{}", stderr(&out));
}

#[test]
fn run_skips_broken_sweep_points_but_finishes_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.toml");
    std::fs::write(
        &path,
        r#"
[system]
n = 1
mu = 1.0

[[class]]
k = 1
lambda = 0.5

[sim]
jobs = 300
replications = 2

[sweep]
parameter = "class1.k"
values = [1, 5]
"#,
    )
    .unwrap();
    let out = fjsim().args(["run", "--config"]).arg(&path).output().unwrap();
    assert!(out.status.success(), "the healthy point carries the run");
    assert!(stderr(&out).contains("skipping sweep point class1.k = 5"), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).map(str::trim).collect();
    assert_eq!(rows.len(), 1, "only the valid point produced a row: {rows:?}");
    assert!(rows[0].starts_with("class1.k,1.000000,"), "{}", rows[0]);
}

#[test]
fn run_split_merge_flag_switches_the_engine_mode() {
    // Split-merge holds all n servers for the full job, so at equal load
    // its latency must exceed fork-join's.
    let run = |extra: &[&str]| -> f64 {
        let out = fjsim()
            .args(["run", "--config"])
            .arg(scenario("smoke.toml"))
            .args(["--jobs", "2000"])
            .args(extra)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        stdout(&out).lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap()
    };
    let fork_join = run(&[]);
    let split_merge = run(&["--split-merge"]);
    // n = k = 1: the two modes coincide; same seed, same trace.
    assert!((fork_join - split_merge).abs() < 1e-9, "{fork_join} vs {split_merge}");
}

// ====================================================================
// sweep-report
// ====================================================================

#[test]
fn sweep_report_renders_run_output_into_figures() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("demo_case.csv");
    let run = fjsim()
        .args(["run", "--config"])
        .arg(scenario("smoke.toml"))
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(run.status.success());

    let figs = dir.path().join("figures");
    let out = fjsim().arg("sweep-report").arg(dir.path()).arg("--out").arg(&figs).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(figs.join("latency_vs_none_case.dat").exists());
    assert!(figs.join("storage_vs_none_case.dat").exists(), "sidecar picked up");
    let manifest = std::fs::read_to_string(figs.join("manifest.txt")).unwrap();
    assert!(manifest.contains("latency_vs_none_case.dat <- demo_case.csv"), "{manifest}");
}

#[test]
fn sweep_report_on_an_empty_directory_reports_no_input_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = fjsim().arg("sweep-report").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no input rows"), "{}", stderr(&out));
}

#[test]
fn sweep_report_names_missing_columns() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("partial.csv"), "sweep_param,mean_latency\nnone,1.0\n").unwrap();
    let out = fjsim().arg("sweep-report").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let msg = stderr(&out);
    assert!(msg.contains("missing columns") && msg.contains("ci95"), "{msg}");
}

#[test]
fn sweep_report_warns_about_mixed_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let header = "sweep_param,sweep_value,class_id,policy,mean_latency,ci95,p50,p95,p99,completed,\
                  efficiency_bits_per_J,t_a,t_l,energy_J,lb,ub,naive_lb,seed,schema_version";
    let body = "none,0.000000,1,fcfs,2.0,0.1,1.4,5.0,9.0,100,3.0,50.0,10.0,1000.0,2.0,2.0,2.0,{S},1";
    std::fs::write(
        dir.path().join("mixed.csv"),
        format!("{header}\n{}\n{}\n", body.replace("{S}", "1"), body.replace("{S}", "2")),
    )
    .unwrap();
    let out = fjsim().arg("sweep-report").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "mixed seeds are a warning, not an error");
    assert!(stderr(&out).contains("mix"), "{}", stderr(&out));
}

// ====================================================================
// determinism
// ====================================================================

#[test]
fn identical_invocations_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let status = fjsim()
            .args(["run", "--config"])
            .arg(scenario("smoke.toml"))
            .args(["--workers", "2"])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn different_seeds_produce_different_latencies() {
    let run = |seed: &str| {
        let out = fjsim()
            .args(["run", "--config"])
            .arg(scenario("smoke.toml"))
            .args(["--jobs", "500", "--seed", seed])
            .output()
            .unwrap();
        assert!(out.status.success());
        stdout(&out).lines().nth(1).unwrap().split(',').nth(4).unwrap().to_string()
    };
    assert_ne!(run("5"), run("6"));
}
