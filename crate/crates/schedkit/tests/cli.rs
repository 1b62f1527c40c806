//! End-to-end tests of the command-line binary: every subcommand, the
//! documented exit codes, and byte-level determinism of outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use schedkit::bounds::anyeta_bound;
use schedkit::io::schedule_from_csv;
use schedkit::refine::{refine, GradientNormLog, NormKind, RefinementConfig, Weighting};
use schedkit::Schedule;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schedkit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_norms(dir: &Path, name: &str, norms: &[f64]) -> PathBuf {
    let mut text = String::from("step,norm\n");
    for (i, n) in norms.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, n));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn schedule_linear_emits_the_documented_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lin.csv");
    let output = run(&[
        "schedule", "--kind", "linear", "--steps", "4", "--out", path_str(&out),
    ]);
    assert_exit(&output, 0);
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "step,multiplier\n1,1\n2,0.6666666666666666\n3,0.3333333333333333\n4,0\n"
    );
}

#[test]
fn schedule_cosine_two_steps_halves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cos.csv");
    assert_exit(
        &run(&["schedule", "--kind", "cosine", "--steps", "2", "--out", path_str(&out)]),
        0,
    );
    assert_eq!(fs::read_to_string(&out).unwrap(), "step,multiplier\n1,1\n2,0.5\n");
}

#[test]
fn schedule_poly_power_one_writes_the_linear_file() {
    let dir = tempfile::tempdir().unwrap();
    let lin = dir.path().join("lin.csv");
    let poly = dir.path().join("poly.csv");
    assert_exit(
        &run(&["schedule", "--kind", "linear", "--steps", "17", "--out", path_str(&lin)]),
        0,
    );
    assert_exit(
        &run(&[
            "schedule", "--kind", "poly", "--power", "1", "--steps", "17", "--out",
            path_str(&poly),
        ]),
        0,
    );
    assert_eq!(fs::read(&lin).unwrap(), fs::read(&poly).unwrap());
}

#[test]
fn schedule_rejects_unknown_kinds_listing_the_choices() {
    let output = run(&["schedule", "--kind", "exponential", "--steps", "4", "--out", "x.csv"]);
    assert_exit(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    for kind in ["linear", "poly", "cosine", "stepwise", "inv-t", "inv-sqrt", "constant"] {
        assert!(stderr.contains(kind), "missing {kind} in:\n{stderr}");
    }
}

#[test]
fn refine_constant_norms_reproduces_normalized_linear_decay() {
    let dir = tempfile::tempdir().unwrap();
    let norms = write_norms(dir.path(), "norms.csv", &[2.0; 12]);
    let refined = dir.path().join("refined.csv");
    let linear = dir.path().join("linear.csv");
    assert_exit(
        &run(&[
            "refine", path_str(&norms), "--tau", "0.1", "--out", path_str(&refined),
        ]),
        0,
    );
    assert_exit(
        &run(&["schedule", "--kind", "linear", "--steps", "12", "--out", path_str(&linear)]),
        0,
    );
    assert_eq!(fs::read(&refined).unwrap(), fs::read(&linear).unwrap());
}

#[test]
fn refine_step_norms_match_the_frozen_schedule() {
    // norms [1,1,1,1,2,2,2,2] with the filter forced to width 1
    let raw = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0];
    let dir = tempfile::tempdir().unwrap();
    let norms = write_norms(dir.path(), "norms.csv", &raw);
    let out = dir.path().join("refined.csv");
    assert_exit(
        &run(&["refine", path_str(&norms), "--tau", "0.05", "--out", path_str(&out)]),
        0,
    );
    let schedule = schedule_from_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    // the CSV round-trips the library result value-for-value
    let log = GradientNormLog::from_norms(raw.to_vec(), NormKind::L2).unwrap();
    let config = RefinementConfig { tau: 0.05, ..Default::default() };
    let library = refine(&log, &config).unwrap();
    assert_eq!(schedule.values(), library.schedule.values());
    let expected = [1.0, 0.75, 0.5, 0.25, 0.046875, 0.03125, 0.015625, 0.0];
    for (got, want) in schedule.values().iter().zip(expected) {
        if want == 0.0 {
            assert_eq!(*got, 0.0);
        } else {
            assert!((got - want).abs() <= 1e-14 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn refine_zero_norms_exit_3_with_guidance() {
    let dir = tempfile::tempdir().unwrap();
    let norms = write_norms(dir.path(), "norms.csv", &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let out = dir.path().join("refined.csv");
    let output = run(&["refine", path_str(&norms), "--out", path_str(&out)]);
    assert_exit(&output, 3);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("linear decay"), "stderr: {stderr}");

    // clamping instead succeeds
    let output = run(&[
        "refine", path_str(&norms), "--zero-policy", "clamp", "--out", path_str(&out),
    ]);
    assert_exit(&output, 0);
    assert!(out.exists());
}

#[test]
fn refine_rejects_malformed_logs_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "step,norm\n1,-3.0\n").unwrap();
    let output = run(&["refine", path_str(&bad), "--out", "x.csv"]);
    assert_exit(&output, 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 2"));
}

#[test]
fn refine_plot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let norms = write_norms(dir.path(), "norms.csv", &[4.0, 3.0, 2.0, 1.5, 1.0, 0.5]);
    let out = dir.path().join("refined.csv");
    let plot_a = dir.path().join("a.svg");
    let plot_b = dir.path().join("b.svg");
    for plot in [&plot_a, &plot_b] {
        assert_exit(
            &run(&[
                "refine", path_str(&norms), "--out", path_str(&out), "--plot", path_str(plot),
            ]),
            0,
        );
    }
    let a = fs::read(&plot_a).unwrap();
    assert_eq!(a, fs::read(&plot_b).unwrap());
    assert!(String::from_utf8_lossy(&a).contains("<svg"));
}

#[test]
fn refine_consumes_jsonl_with_a_kind_flag() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("norms.jsonl");
    fs::write(
        &jsonl,
        "{\"step\":1,\"norm\":4.0}\n{\"step\":2,\"norm\":2.0}\n{\"step\":3,\"norm\":1.0}\n",
    )
    .unwrap();
    let out = dir.path().join("refined.csv");
    assert_exit(
        &run(&[
            "refine", path_str(&jsonl), "--norm-kind", "l1", "--out", path_str(&out),
        ]),
        0,
    );
    let got = schedule_from_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    let log =
        GradientNormLog::from_norms(vec![4.0, 2.0, 1.0], NormKind::L1).unwrap();
    let config = RefinementConfig {
        weighting: Weighting::for_kind(NormKind::L1),
        ..Default::default()
    };
    let expected = refine(&log, &config).unwrap();
    assert_eq!(got.values(), expected.schedule.values());
}

/// The decaying benchmark multipliers `(D/(G sqrt(T))) (1 - t/(T+1))`,
/// which stay strictly positive through the final step.
fn benchmark_eta(horizon: usize, distance: f64, lipschitz: f64) -> Vec<f64> {
    let lambda = distance / (lipschitz * (horizon as f64).sqrt());
    (1..=horizon)
        .map(|t| lambda * (1.0 - t as f64 / (horizon as f64 + 1.0)))
        .collect()
}

fn write_schedule(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let mut text = String::from("step,multiplier\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, v));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bound_reproduces_the_benchmark_decay_total() {
    let dir = tempfile::tempdir().unwrap();
    let eta = benchmark_eta(100, 1.0, 1.0);
    let eta_path = write_schedule(dir.path(), "eta.csv", &eta);
    let output = run(&[
        "bound", "--eta-file", path_str(&eta_path), "--G", "1", "--D", "1",
    ]);
    assert_exit(&output, 0);
    let report: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("bound prints JSON");
    let total = report["total"].as_f64().unwrap();
    let expected = anyeta_bound(&Schedule::new(eta).unwrap(), &[1.0; 100], 1.0)
        .unwrap()
        .total;
    assert!((total - expected).abs() <= 1e-15 * expected, "{total} vs {expected}");
    // frozen closed form (2 + (H(99) - 3/2)/101) * DG/sqrt(T)
    assert!((total - 0.2036409678392).abs() < 1e-12, "total {total}");
    assert!(total <= 2.25 / 10.0);
}

#[test]
fn bound_with_zero_norms_keeps_only_the_distance_term() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = write_schedule(dir.path(), "eta.csv", &[0.5, 0.25, 0.25, 0.125]);
    let norms = write_norms(dir.path(), "norms.csv", &[0.0; 4]);
    let output = run(&[
        "bound", "--eta-file", path_str(&eta_path), "--norms-file", path_str(&norms),
        "--D", "2",
    ]);
    assert_exit(&output, 0);
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let total = report["total"].as_f64().unwrap();
    let distance = report["distance_term"].as_f64().unwrap();
    assert_eq!(total, distance);
    assert_eq!(report["variance_term"].as_f64().unwrap(), 0.0);
    assert_eq!(report["tail_term"].as_f64().unwrap(), 0.0);
    // D^2 / (2 sum eta) with D=2, sum = 1.125
    assert!((distance - 4.0 / 2.25).abs() < 1e-15);
}

#[test]
fn bound_rejects_zeroed_multipliers_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = write_schedule(dir.path(), "eta.csv", &[0.5, 0.0, 0.0]);
    let output = run(&[
        "bound", "--eta-file", path_str(&eta_path), "--G", "1", "--D", "1",
    ]);
    assert_exit(&output, 3);
    assert!(String::from_utf8_lossy(&output.stderr).contains("zero suffix sum"));
}

#[test]
fn bound_requires_exactly_one_norm_source() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = write_schedule(dir.path(), "eta.csv", &[0.5, 0.25]);
    assert_exit(&run(&["bound", "--eta-file", path_str(&eta_path), "--D", "1"]), 2);
    let norms = write_norms(dir.path(), "norms.csv", &[1.0, 1.0]);
    assert_exit(
        &run(&[
            "bound", "--eta-file", path_str(&eta_path), "--norms-file", path_str(&norms),
            "--G", "1", "--D", "1",
        ]),
        2,
    );
}

#[test]
fn simulate_abs_row_meets_the_classic_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    assert_exit(
        &run(&[
            "simulate", "--problem", "abs", "--schedules", "linear", "--seeds", "1",
            "--steps", "64", "--out", path_str(&out),
        ]),
        0,
    );
    let text = fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).expect("one data row");
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[0], "linear");
    let gap: f64 = cells[4].parse().expect("suboptimality cell");
    // D = G = 1: gap must not exceed 1/sqrt(64)
    assert!(gap <= 0.125, "gap {gap}");
}

#[test]
fn simulate_is_byte_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        assert_exit(
            &run(&[
                "simulate", "--problem", "logreg", "--schedules", "linear,refined",
                "--seeds", "1", "--seed", "3", "--steps", "120", "--out", path_str(out),
            ]),
            0,
        );
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.jsonl")).unwrap(),
        fs::read(dir.path().join("b.jsonl")).unwrap()
    );
    // run log carries one record per (schedule, seed)
    let log = fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn simulate_rejects_unknown_names() {
    assert_exit(
        &run(&[
            "simulate", "--problem", "abs", "--schedules", "mystery", "--seeds", "1",
            "--steps", "8", "--out", "x.csv",
        ]),
        3,
    );
    assert_exit(
        &run(&[
            "simulate", "--problem", "nope", "--schedules", "linear", "--seeds", "1",
            "--steps", "8", "--out", "x.csv",
        ]),
        3,
    );
}

#[test]
fn fit_poly_recovers_planted_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("sched.csv");
    assert_exit(
        &run(&[
            "schedule", "--kind", "poly", "--power", "2.5", "--steps", "400",
            "--warmup", "0.15", "--out", path_str(&sched),
        ]),
        0,
    );
    let output = run(&["fit-poly", path_str(&sched)]);
    assert_exit(&output, 0);
    let fit: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let warmup = fit["warmup_fraction"].as_f64().unwrap();
    let power = fit["power"].as_f64().unwrap();
    assert!((warmup - 0.15).abs() <= 0.01, "warmup {warmup}");
    assert!((power - 2.5).abs() <= 0.1, "power {power}");
}

#[test]
fn missing_input_files_exit_2() {
    assert_exit(&run(&["refine", "/nonexistent/norms.csv", "--out", "x.csv"]), 2);
    assert_exit(
        &run(&["bound", "--eta-file", "/nonexistent/eta.csv", "--G", "1", "--D", "1"]),
        2,
    );
}
