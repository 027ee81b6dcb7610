use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fibrelab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, solver: &str, study: &str) -> String {
    let path = dir.join(name);
    fs::write(
        &path,
        format!(
            r#"{{
                "geometry": {{"type": "waveguide", "length": 6.283185307179586,
                              "curvature": {{"constant": 1.0, "cos": [0.5, 0.3]}}}},
                "epsilons": [0.2, 0.1, 0.05],
                "grid": {{"n_s": 32, "n_f": 16, "stencil_order": 4}},
                "solver": {solver},
                "study": {study}
            }}"#
        ),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn self_check_passes() {
    let out = run(&["check"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn study_exit_codes_and_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let strict = write_config(
        dir.path(),
        "strict.json",
        r#"{"seed": 3}"#,
        r#"{"mode_index": [0, 1], "checks": ["eig_rate", "courant"], "thresholds": {"eig_rate": 10.0}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");

    let out = run(&["study", "--config", &strict, "--out", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["study", "--config", &strict, "--out", b.to_str().unwrap(), "--assert"]);
    assert_eq!(code(&out), 3);

    for file in [
        "report.json",
        "records.csv",
        "eig_gap.svg",
        "supnorm.svg",
        "hausdorff.svg",
    ] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }
    assert!(a.join("timings.json").exists());
    let csv = fs::read_to_string(a.join("records.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "epsilon,mode,lambda_full,mu_eff,eig_gap,supnorm,hausdorff,nodal_domains,nodal_components,\
         boundary_components,graph_check,disc_err_est"
    );
    assert_eq!(csv.lines().count(), 1 + 3 * 2);

    let relaxed = write_config(
        dir.path(),
        "relaxed.json",
        r#"{"seed": 3}"#,
        r#"{"checks": ["courant"]}"#,
    );
    let out = run(&["study", "--config", &relaxed, "--out", a.to_str().unwrap(), "--assert"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["study", "--config", missing.to_str().unwrap()])), 1);

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(code(&run(&["study", "--config", garbage.to_str().unwrap()])), 1);

    let cfg = write_config(dir.path(), "ok.json", "{}", r#"{"checks": ["courant"]}"#);
    assert_eq!(code(&run(&["solve", "--config", &cfg, "--epsilon", "1.5"])), 1);
    assert_eq!(
        code(&run(&[
            "nodal",
            "--config",
            &cfg,
            "--epsilon",
            "0.1",
            "--mode",
            "100000"
        ])),
        1
    );
}

#[test]
fn solver_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "high.json",
        r#"{"shift": 50.0}"#,
        r#"{"checks": ["courant"]}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(
        code(&run(&["study", "--config", &cfg, "--out", out.to_str().unwrap()])),
        2
    );
    assert_eq!(code(&run(&["solve", "--config", &cfg, "--epsilon", "0.1"])), 2);
}

#[test]
fn solve_and_nodal_print_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.json", "{}", r#"{"checks": ["courant"]}"#);
    let out = run(&["solve", "--config", &cfg, "--epsilon", "0.1", "--k", "4"]);
    assert_eq!(code(&out), 0);
    let values: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert!((values[0] - std::f64::consts::PI.powi(2) / 4.0).abs() < 0.05);

    let out = run(&["nodal", "--config", &cfg, "--epsilon", "0.1", "--mode", "1"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "s0,f0,s1,f1,component");
    assert!(text.lines().count() > 1);

    let file = dir.path().join("nodal.csv");
    let out = run(&[
        "nodal",
        "--config",
        &cfg,
        "--epsilon",
        "0.1",
        "--mode",
        "1",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(file).unwrap(), text);
}
