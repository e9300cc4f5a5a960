//! End-to-end checks of the binary: output shapes, determinism, exit
//! codes, and file emission.

use std::process::{Command, Output};

fn maxload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxload"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exact_small_case() {
    let out = maxload(&["exact", "-n", "2", "-r", "1", "-T", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("3/2 (1.5)"), "{text}");
    assert!(text.contains("A:    1/2 (0.5)"), "{text}");
}

#[test]
fn exact_deterministic_process_and_t_zero() {
    let out = maxload(&["exact", "-n", "3", "-r", "3", "-T", "10"]);
    assert!(stdout(&out).contains("10/1 (10.0)"));
    let out = maxload(&["exact", "-n", "2", "-r", "1", "-T", "0"]);
    assert!(stdout(&out).contains("0/1 (0.0)"));
}

#[test]
fn exact_dist_prints_pmf() {
    let out = maxload(&["exact", "-n", "2", "-r", "1", "-T", "3", "--dist"]);
    let text = stdout(&out);
    assert!(text.contains("max PMF:"), "{text}");
    assert!(text.contains("2: 3/4"), "{text}");
    assert!(text.contains("3: 1/4"), "{text}");
}

#[test]
fn exact_csv_format() {
    let out = maxload(&["exact", "-n", "2", "-r", "1", "-T", "2", "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,r,T,e_u,e_u_decimal,a,a_decimal");
    assert_eq!(lines.next().unwrap(), "2,1,2,3/2,1.5,1/2,0.5");
    // LF endings only
    assert!(!text.contains('\r'));
}

#[test]
fn usage_error_exits_1() {
    let out = maxload(&["exact", "-n", "2", "-r", "3", "-T", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = maxload(&["exact", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn capacity_error_exits_2() {
    let out = maxload(&[
        "exact", "-n", "6", "-r", "2", "-T", "30", "--max-classes", "20",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("capacity"), "{err}");
}

#[test]
fn simulate_deterministic_output() {
    let args = [
        "simulate", "-n", "3", "-r", "2", "-T", "100", "--reps", "500", "--seed", "7",
    ];
    let a = maxload(&args);
    let b = maxload(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("seed: 7"), "{text}");
}

#[test]
fn simulate_r_equals_n_is_zero() {
    let out = maxload(&[
        "simulate", "-n", "3", "-r", "3", "-T", "50", "--reps", "100", "--seed", "1",
    ]);
    let text = stdout(&out);
    assert!(text.contains("mean:      0.0"), "{text}");
    assert!(text.contains("std error: 0.0"), "{text}");
}

#[test]
fn simulate_worker_count_does_not_change_results() {
    let base = [
        "simulate", "-n", "4", "-r", "2", "-T", "200", "--reps", "400", "--seed", "5",
    ];
    let w1 = maxload(&[&base[..], &["--workers", "1"]].concat());
    let w8 = maxload(&[&base[..], &["--workers", "8"]].concat());
    let s1 = stdout(&w1).replace("workers: 1", "");
    let s8 = stdout(&w8).replace("workers: 8", "");
    assert_eq!(s1, s8);
}

#[test]
fn simulate_emits_samples_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.csv");
    let out = maxload(&[
        "simulate", "-n", "2", "-r", "1", "-T", "16", "--reps", "10", "--seed", "3",
        "--emit-samples", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("value\n"));
    assert_eq!(csv.lines().count(), 11);
    let meta = std::fs::read_to_string(dir.path().join("samples.csv.meta")).unwrap();
    assert!(meta.contains("n: 2\n"));
    assert!(meta.contains("seed: 3\n"));
}

#[test]
fn constant_closed_form_values() {
    let out = maxload(&["constant", "-n", "4", "-r", "2"]);
    let text = stdout(&out);
    assert!(text.contains("0.594310148701"), "{text}");
    let out = maxload(&["constant", "-n", "5", "-r", "5"]);
    assert!(stdout(&out).contains("= 0.0"));
}

#[test]
fn constant_quadrature_for_larger_n() {
    let out = maxload(&["constant", "-n", "10", "-r", "3", "--method", "quad"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("method: quadrature"), "{text}");
}

#[test]
fn constant_closed_form_unsupported_exits_1() {
    let out = maxload(&["constant", "-n", "10", "-r", "3", "--method", "closed"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_and_exits_0() {
    let out = maxload(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("C(2,1)"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");

    let csv = maxload(&["verify", "--format", "csv"]);
    let text = stdout(&csv);
    assert!(text.starts_with("quantity,computed,paper_value,abs_error,pass\n"));
}

#[test]
fn estimate_exact_backend() {
    let out = maxload(&[
        "estimate", "-n", "2", "-r", "1", "--grid", "25,50,100,200",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("c_hat"), "{text}");
    // grid of that size gets within a few percent of 0.39894
    let c_hat: f64 = text
        .lines()
        .find(|l| l.trim_start().starts_with("c_hat"))
        .and_then(|l| l.split('=').nth(1))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((c_hat - 0.39894).abs() < 0.02, "{c_hat}");
}

#[test]
fn estimate_mc_backend_requires_seed() {
    let out = maxload(&[
        "estimate", "-n", "2", "-r", "1", "--backend", "mc", "--reps", "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("--seed"), "{err}");
}

#[test]
fn estimate_mc_backend_csv() {
    let out = maxload(&[
        "estimate", "-n", "3", "-r", "3", "--backend", "mc", "--grid", "10,20,40",
        "--reps", "50", "--seed", "2", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,r,backend,c_hat,"), "{text}");
    assert!(text.contains(",montecarlo,"), "{text}");
}

#[test]
fn sweep_csv_output() {
    let out = maxload(&["sweep", "--n-max", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,r,c_nr,error_bound");
    // rows: (2,1), (3,1), (3,2), (4,1), (4,2), (4,3)
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("2,1,0.398942"), "{}", lines[1]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = maxload(&["sweep", "--n-max", "3", "--csv", path.to_str().unwrap()]);
    assert!(out.status.success());
    let file = std::fs::read_to_string(&path).unwrap();
    assert!(file.starts_with("n,r,c_nr,error_bound\n"));
}

#[test]
fn workers_env_var_is_honored() {
    let out = Command::new(env!("CARGO_BIN_EXE_maxload"))
        .env("MAXLOAD_WORKERS", "3")
        .args([
            "simulate", "-n", "2", "-r", "1", "-T", "10", "--reps", "20", "--seed", "4",
        ])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("workers: 3"));
}
