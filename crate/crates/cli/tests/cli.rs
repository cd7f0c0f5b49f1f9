use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn part(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_part")).args(args).output().expect("run part")
}

fn ok(args: &[&str]) {
    let out = part(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn beta_subsets_aggregate_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("beta");
    ok(&["gen", "bernoulli", "--n-obs", "1000", "--m", "2", "--theta", "0.3", "--draws", "2000", "--out", s(&gen)]);
    let out = dir.path().join("agg.csv");
    ok(&["aggregate", "--method", "part-kd", "--trees", "4", "--draws", "1500", "--in", s(&gen), "--out", s(&out)]);
    assert_eq!(data_rows(&out), 1500);
    let manifest = fs::read_to_string(dir.path().join("agg.csv.manifest")).unwrap();
    assert!(manifest.contains("method=part-kd"));
    assert!(manifest.contains("trees=4"));
    assert_eq!(manifest.matches("input.sha256.").count(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("g");
    ok(&["gen", "bimodal", "--m", "3", "--n", "2000", "--seed", "4", "--out", s(&gen)]);
    for method in ["part-ml", "average", "weighted", "parametric"] {
        let a = dir.path().join(format!("{method}-a.csv"));
        let b = dir.path().join(format!("{method}-b.csv"));
        for o in [&a, &b] {
            ok(&["aggregate", "--method", method, "--pairwise", "--trees", "3", "--draws", "500",
                "--intermediate-draws", "2000", "--seed", "9", "--in", s(&gen), "--out", s(o)]);
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{method}");
    }
}

#[test]
fn unknown_method_fails_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = part(&["aggregate", "--method", "nope", "--in", s(dir.path()), "--out", "x.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("possible values"));
}

#[test]
fn missing_input_is_one_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = part(&["aggregate", "--method", "average", "--in", s(&dir.path().join("none")), "--out", "x.csv"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error kind=Io:"), "{err}");
}

#[test]
fn pairwise_needs_two_subsets() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("subset_0.csv"), "theta_1\n0.1\n0.2\n0.3\n").unwrap();
    let out = part(&["aggregate", "--method", "part-kd", "--pairwise", "--in", s(dir.path()), "--out",
        s(&dir.path().join("o.csv"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error kind=InvalidInput:"), "{err}");
    assert!(!dir.path().join("o.csv").exists());
}

#[test]
fn malformed_draw_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("subset_0.csv"), "theta_1\n0.1\nNaN\n").unwrap();
    let out = part(&["aggregate", "--method", "average", "--in", s(dir.path()), "--out", s(&dir.path().join("o.csv"))]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error kind=Parse:") && err.contains("line 3"), "{err}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("g");
    ok(&["gen", "bernoulli", "--n-obs", "400", "--m", "2", "--theta", "0.4", "--draws", "1000", "--out", s(&gen)]);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# test\nmethod = average\ndraws = 300\nseed = 2\n").unwrap();
    let out = dir.path().join("o.csv");
    ok(&["aggregate", "--config", s(&cfg), "--draws", "120", "--in", s(&gen), "--out", s(&out)]);
    assert_eq!(data_rows(&out), 120);
    let manifest = fs::read_to_string(dir.path().join("o.csv.manifest")).unwrap();
    assert!(manifest.contains("method=average") && manifest.contains("seed=2"));

    fs::write(&cfg, "bogus = 1\n").unwrap();
    let bad = part(&["aggregate", "--config", s(&cfg), "--method", "average", "--in", s(&gen), "--out", s(&out)]);
    assert!(!bad.status.success());
}

#[test]
fn logistic_chain_eval_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("data");
    ok(&["gen", "logistic", "--n-obs", "400", "--p", "3", "--m", "2", "--seed", "1", "--out", s(&gen)]);
    let chains = dir.path().join("chains");
    ok(&["chain", "--data", s(&gen.join("data.csv")), "--theta-star", s(&gen.join("theta_star.csv")),
        "--iterations", "2000", "--burn-in", "1000", "--full", "--out", s(&chains)]);
    assert_eq!(data_rows(&chains.join("subset_0.csv")), 2000);
    assert_eq!(data_rows(&chains.join("full.csv")), 2000);

    let agg = dir.path().join("agg.csv");
    ok(&["aggregate", "--method", "part-kd", "--trees", "3", "--draws", "2000", "--delta-rho", "0.01",
        "--in", s(&chains), "--out", s(&agg)]);
    let report = dir.path().join("report.csv");
    ok(&["eval", "--truth", s(&chains.join("full.csv")), "--approx", s(&agg), "--theta-star",
        s(&gen.join("theta_star.csv")), "--method", "part-kd", "--out", s(&report)]);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("method,metric,value,seed\n"));
    for metric in ["rmse_posterior_mean", "rmse_coordinate", "kl_truth_approx", "concentration_ratio"] {
        assert!(text.contains(&format!("part-kd,{metric},")), "{metric} missing");
    }

    let bern = dir.path().join("b");
    ok(&["gen", "bernoulli", "--n-obs", "300", "--m", "1", "--theta", "0.5", "--draws", "5000", "--out", s(&bern)]);
    let grid = dir.path().join("grid.csv");
    ok(&["density", "--in", s(&bern.join("subset_0.csv")), "--grid", "50", "--range", "0:1", "--out", s(&grid)]);
    let rows: Vec<(f64, f64)> = fs::read_to_string(&grid)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (x, d) = l.split_once(',').unwrap();
            (x.parse().unwrap(), d.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 50);
    let mass: f64 = rows.iter().map(|r| r.1 / 50.0).sum();
    assert!((mass - 1.0).abs() < 1e-9);
}

#[test]
fn bad_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("d.csv");
    fs::write(&f, "theta_1\n0.5\n").unwrap();
    let out = part(&["density", "--in", s(&f), "--range", "3:1", "--out", s(&dir.path().join("g.csv"))]);
    assert!(!out.status.success());
}
