use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phasenoise"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .parse()
        .unwrap()
}

const SMALL: &str = r#"
[system]
kappa = 1.0
delta = 1.0
photon_number = 1.0e4

[noise]
kind = "white"
gamma_l = 1.0e-3

[sim]
dt = 0.01
duration = 30.0
n_trajectories = 8
seed = 2
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn every_bundled_example_parses() {
    for entry in std::fs::read_dir(example("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            phasenoise_cli::Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn budget_report_and_csv_output() {
    let cfg = example("budget.toml");
    let o = run(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!((field(&text, "n") / 5e11 - 1.0).abs() < 1e-9);
    assert_eq!(field(&text, "max_gamma_l_at_n_1e10"), 1e-3);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("budget.csv");
    let o = run(&["analytic", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("scenario_hash,name,kappa"));
}

#[test]
fn units_flag_scales_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let rad = stdout(&run(&["analytic", "--config", &cfg]));
    let hz = stdout(&run(&["analytic", "--config", &cfg, "--units", "hz"]));
    let c = 2.0 * std::f64::consts::PI;
    assert!((field(&hz, "kappa") / field(&rad, "kappa") - c).abs() < 1e-12);
    // n_add depends only on rate ratios
    assert!((field(&hz, "n_add") / field(&rad, "n_add") - 1.0).abs() < 1e-12);
    assert_ne!(field(&hz, "pump_rate"), field(&rad, "pump_rate"));
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let a = run(&["simulate", "--config", &cfg]);
    let b = run(&["simulate", "--config", &cfg]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["simulate", "--config", &cfg, "--seed", "3"]);
    assert_ne!(a.stdout, c.stdout);
    let rec: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(rec["seed"], 3);
    assert_eq!(rec["mode"], "displaced");
    assert_eq!(rec["stats"]["trajectories"], 8);
    assert!(rec["rng"].as_str().unwrap().contains("ChaCha8"));
    assert_eq!(rec["scenario_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_modes_and_trajectory_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let dump = dir.path().join("t.csv");
    let o = run(&[
        "simulate",
        "--config",
        &cfg,
        "--mode",
        "two-cavity",
        "--trajectories",
        "2",
        "--dump-trajectories",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let labels: Vec<&str> = rec["stats"]["modes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["a", "b", "sum", "diff"]);
    let t = std::fs::read_to_string(&dump).unwrap();
    assert!(t.starts_with("t,re_a,im_a,re_b,im_b\n"));
    assert_eq!(t.lines().count(), 1 + 3000);

    // the dumped trajectory feeds the spectrum estimator
    let o = run(&["psd", "--input", dump.to_str().unwrap(), "--column", "re_a", "--segment", "256"]);
    assert!(o.status.success());
    let spec = stdout(&o);
    assert!(spec.starts_with("omega_rad_per_s,S\n"));
    assert_eq!(spec.lines().count(), 1 + 129);
}

#[test]
fn sweep_table_is_ordered_and_complete() {
    let o = run(&["sweep", "--config", example("linewidth_sweep.toml").to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), phasenoise_cli::commands::SWEEP_COLUMNS);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let mut last = 0.0;
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[col("point")].parse::<usize>().unwrap(), i);
        let g: f64 = r[col("gamma_l")].parse().unwrap();
        let n: f64 = r[col("n")].parse().unwrap();
        let n_add: f64 = r[col("n_add")].parse().unwrap();
        assert!(g > last);
        last = g;
        assert!((n_add - n * g / (1.0 + g)).abs() <= 1e-12 * n_add);
    }
}

#[test]
fn coupled_both_routes_agree() {
    let o = run(&["coupled", "--config", example("mirror_cooling.toml").to_str().unwrap(), "--method", "both"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(field(&text, "agreement_n_m") < 1e-6);
    assert!(field(&text, "lyapunov.residual") < 1e-10);
    assert!(field(&text, "lyapunov.n_m") < field(&text, "n_th"));
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    // configuration and validation errors
    let bad = write(dir.path(), "bad.toml", &SMALL.replace("kappa = 1.0", "kappa = -1.0"));
    let o = run(&["analytic", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("system.kappa"));
    let typo = write(dir.path(), "typo.toml", &SMALL.replace("gamma_l", "gama_l"));
    let o = run(&["analytic", "--config", &typo]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    assert_eq!(run(&["analytic"]).status.code(), Some(2));
    let coarse = write(dir.path(), "dt.toml", &SMALL.replace("dt = 0.01", "dt = 0.5"));
    assert_eq!(run(&["simulate", "--config", &coarse]).status.code(), Some(2));

    // numerical failure: blue detuning makes the coupled drift unstable
    let blue = std::fs::read_to_string(example("mirror_cooling.toml"))
        .unwrap()
        .replace("delta = 1.0", "delta = -1.0");
    let blue = write(dir.path(), "blue.toml", &blue);
    let o = run(&["coupled", "--config", &blue]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eigenvalues"));

    // unwritable output
    let cfg = write(dir.path(), "s.toml", SMALL);
    let o = run(&["analytic", "--config", &cfg, "--output", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_sweep_axis_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[sweep]\n[[sweep.axis]]\nname = \"noise.half_width\"\nvalues = [1.0]\n");
    let cfg = write(dir.path(), "s.toml", &text);
    let o = run(&["sweep", "--config", &cfg, "--mode", "displaced"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn thread_cap_is_validated() {
    let cfg = example("budget.toml");
    let o = bin()
        .args(["analytic", "--config", cfg.to_str().unwrap()])
        .env(phasenoise_cli::THREADS_ENV, "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
