use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gls-tail"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tailbound_example() {
    let o = run(&["tailbound", "--psi", "power:2", "--C", "1", "--t", "2.718281828"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.256_881_365_313_470_2).abs() < 1e-6, "{v}");
}

#[test]
fn gls_norm_example() {
    let o = run(&["gls-norm", "--oracle", "const:1", "--kappa", "const:1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1");
}

#[test]
fn conjugate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conjugate.csv");
    let o = run(&["conjugate", "--psi", "power:2", "--y", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y,hstar,argmax_p"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[1] - std::f64::consts::E / 2.0).abs() < 1e-9);
    assert!((row[2] - std::f64::consts::E).abs() < 1e-6);
}

#[test]
fn transfer_prints_table() {
    let o = run(&["transfer", "--kernel", "doob", "--oracle", "const:1", "--p0", "2", "--p", "1", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,psi,argmin_r");
    assert_eq!(lines[1], "1,2,2");
    assert!(lines[2].starts_with("4,1.333333333333333"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["frobnicate"],
        vec!["tailbound", "--psi", "power:2"],
        vec!["tailbound", "--psi", "nonsense", "--t", "3"],
        vec!["gls-norm", "--oracle", "const:1", "--kappa", "power:0"],
        vec!["verify-doob", "--trials", "10"],
        vec!["verify-doob", "--law", "cauchy"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn verify_doob_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify-doob", "--law", "gaussian", "--n", "64", "--trials", "100000", "--seed", "7", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(read(dir.path(), "moment_report.csv").starts_with("p,lhs,rhs,margin\n2,"));
    assert!(read(dir.path(), "tail_report.csv").starts_with("t,empirical,stderr,bound,violation\n"));
    assert!(read(dir.path(), "conjugate.csv").starts_with("y,hstar,argmax_p\n"));
    assert!(stdout(&o).contains("moment violations: 0, tail violations: 0"));
}

#[test]
fn config_file_drives_verify_bdg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bdg");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "n_steps = 16\nn_trials = 5000\nseed = 3\noutput_dir = {:?}\n\n[law]\nkind = \"rademacher\"\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = run(&["verify-bdg", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = read(&out, "moment_report.csv");
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let rhs: f64 = rows[0].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(rhs, std::f64::consts::E.sqrt() * 4.0);
}

#[test]
fn simulate_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate", "--law", "uniform:2", "--n", "8", "--trials", "200", "--seed", "1", "--serial", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for f in ["terminal.csv", "running_max.csv", "quad_variation_sqrt.csv"] {
        let text = read(dir.path(), f);
        assert!(text.starts_with("value\n"));
        assert_eq!(text.lines().count(), 201);
    }
}
