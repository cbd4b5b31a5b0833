use std::fs;
use std::path::Path;

use lapse_cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["lapse"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn simulate(out: &Path, extra: &[&str]) -> i32 {
    let out = out.to_str().unwrap();
    let mut args = vec!["simulate", "--out", out];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn minimal_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let code = simulate(dir.path(), &["--policy", "round_robin", "--seed", "1", "--slots", "10"]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("round_robin,1,10,"));
    assert!(dir.path().join("summary.csv").exists());
    assert!(dir.path().join("bound.csv").exists());
    assert!(dir.path().join("chart.svg").exists());
}

#[test]
fn no_chart_flag() {
    let dir = tempfile::tempdir().unwrap();
    let code = simulate(dir.path(), &["--policy", "rr", "--seed", "1", "--slots", "10", "--no-chart"]);
    assert_eq!(code, 0);
    assert!(!dir.path().join("chart.svg").exists());
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = ["--policy", "aoi,context_lapse", "--seed", "3", "--seeds", "2", "--slots", "2000"];
    assert_eq!(simulate(a.path(), &extra), 0);
    assert_eq!(simulate(b.path(), &extra), 0);
    for file in ["results.csv", "summary.csv", "bound.csv", "chart.svg"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn summary_matches_results() {
    let dir = tempfile::tempdir().unwrap();
    let extra = ["--policy", "lapse", "--seed", "1", "--seeds", "3", "--slots", "1000"];
    assert_eq!(simulate(dir.path(), &extra), 0);
    let mut results = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
    let values: Vec<f64> = results
        .records()
        .map(|r| r.unwrap()[3].parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    let mean = values.iter().sum::<f64>() / 3.0;
    let mut summary = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let row = summary.records().next().unwrap().unwrap();
    assert_eq!(&row[0], "lapse_index");
    assert_eq!(&row[1], "3");
    let reported: f64 = row[2].parse().unwrap();
    assert!((reported - mean).abs() <= 1e-12 * mean.abs());
}

#[test]
fn config_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "experiment = \"synthetic_violation\"\nn_users = 4\nn_channels = 1\nslots = 500\npolicies = [\"round_robin\"]\n\n[p]\nvalues = [0.9, 0.9, 1.0, 1.0]\n\n[seeds]\nlist = [5]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("round_robin,5,500,"));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "n_users = 3\nn_channels = 0\n").unwrap();
    let code = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(simulate(dir.path(), &["--policy", "nope"]), 1);
    assert_eq!(run(&["simulate", "--bogus-flag"]), 1);
    assert_eq!(run(&["waterfill", "--widths", "1,-1", "--budget", "1"]), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn waterfill_and_bound_subcommands() {
    assert_eq!(run(&["waterfill", "--widths", "1,1,4", "--budget", "2"]), 0);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["bound", "--out", dir.path().to_str().unwrap()]), 0);
    let text = fs::read_to_string(dir.path().join("bound.csv")).unwrap();
    let total = text.lines().last().unwrap();
    let value: f64 = total.rsplit(',').next().unwrap().parse().unwrap();
    assert!(total.starts_with("total,"));
    assert!((value - 73.74668244352449).abs() < 1e-9);
}

#[test]
fn cartpole_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cp.toml");
    fs::write(&cfg, "[cartpole]\ncalibration_episodes = 50\n").unwrap();
    let code = run(&[
        "cartpole",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "2",
        "--episodes",
        "20",
        "--policy",
        "round_robin,lapse",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    let cal = fs::read_to_string(dir.path().join("calibration.txt")).unwrap();
    assert!(cal.contains("a2_x_dot"));
}
