use std::path::Path;

use halfband_cli::run;
use serde_json::Value;

fn args(line: &str) -> Vec<String> {
    std::iter::once("halfband".to_string())
        .chain(line.split_whitespace().map(str::to_string))
        .collect()
}

fn run_to(dir: &Path, name: &str, line: &str) -> (i32, std::path::PathBuf) {
    let out = dir.join(name);
    let code = run(args(&format!("{line} --out {}", out.display())));
    (code, out)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_benchmark_binds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run_to(dir.path(), "s.json", "solve --d 1 --sigma 0 --h 0.125 --L 6 --k 5 --format json");
    assert_eq!(code, 0);
    let v = read_json(&out);
    let e: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(e.len(), 5);
    assert!(e[0] < 4.9348);
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(v["config"]["h"], 0.125);
    assert_eq!(v["config"]["L"], 6.0);
    assert_eq!(v["config"]["subcommand"], "solve");
    assert!(v["version"].is_string());
}

#[test]
fn strip_threshold_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run_to(dir.path(), "o.json", "oracle --name strip-threshold --d 1");
    assert_eq!(code, 0);
    assert_eq!(read_json(&out)["value"].as_f64().unwrap(), 4.934802200544679);

    let (code, out) = run_to(dir.path(), "r.json", "oracle --name robin-interval --gamma -1 --d 1");
    assert_eq!(code, 0);
    let v = read_json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.708).abs() < 2e-3);
    assert_eq!(v["provenance"], "SecularRoot");

    assert_eq!(run(args("oracle --name rect-ground-state --d 1")), 2);
}

#[test]
fn threshold_search_flips() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run_to(dir.path(), "t.json", "threshold --d 1 --bracket -100 0");
    assert_eq!(code, 0);
    let v = read_json(&out);
    assert!(v["gamma_star"].as_f64().unwrap() < 0.0);
    assert!(v["width"].as_f64().unwrap() <= 0.05);
    assert_eq!(v["verdict_hi"], "Yes");
    assert_eq!(v["verdict_lo"], "No");
    assert_eq!(v["config"]["bracket"], serde_json::json!([-100.0, 0.0]));
}

#[test]
fn invalid_bracket_is_a_numerical_failure() {
    assert_eq!(run(args("threshold --d 1 --bracket -0.01 0")), 1);
}

#[test]
fn usage_errors() {
    assert_eq!(run(args("solve --sigma 1 --sigma-file p.txt")), 2);
    assert_eq!(run(args("solve --h 0.3")), 2);
    assert_eq!(run(args("solve --format csv")), 2);
    assert_eq!(run(args("frobnicate")), 2);
    assert_eq!(run(args("solve --truncation robin")), 2);
    assert_eq!(run(args("sweep --h 0.25 --L 4")), 2);
}

#[test]
fn missing_profile_file_is_reported() {
    assert_eq!(run(args("solve --sigma-file /nonexistent/profile.txt")), 1);
}

#[test]
fn config_file_supplies_flags_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# benchmark\nd = 1\nh = 0.25\nL = 3\nsigma = 0.5  # attractive\nk = 2\nbracket = -1 0\n")
        .unwrap();
    let (code, out) = run_to(dir.path(), "a.json", &format!("solve --config {} --k 3", cfg.display()));
    assert_eq!(code, 0);
    let v = read_json(&out);
    assert_eq!(v["config"]["h"], 0.25);
    assert_eq!(v["config"]["sigma"]["constant"], 0.5);
    assert_eq!(v["config"]["k"], 3);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 3);

    let profile = dir.path().join("p.txt");
    std::fs::write(&profile, "0 1\n1 1\n").unwrap();
    let (code, out) = run_to(
        dir.path(),
        "b.json",
        &format!("solve --config {} --sigma-file {}", cfg.display(), profile.display()),
    );
    assert_eq!(code, 0);
    let v = read_json(&out);
    assert!(v["config"]["sigma"]["file"].is_string());

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(run(args(&format!("solve --config {}", cfg.display()))), 2);
}

#[test]
fn eigenfunction_export() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run_to(dir.path(), "u.csv", "export-eigenfunction --h 0.25 --L 3 --format csv");
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 3));
    let meta = read_json(&dir.path().join("u.csv.json"));
    assert_eq!(meta["n_vertices"].as_u64().unwrap() as usize, rows.len());
    assert_eq!(meta["config"]["subcommand"], "export-eigenfunction");
    // Constrained vertices carry zeros.
    assert!(rows.iter().any(|r| r[2] == 0.0));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let line = "sweep --h 0.25 --L 4 --values -0.5,0,1 --k 2 --format csv";
    let (c1, a) = run_to(dir.path(), "a.csv", line);
    let first = std::fs::read(&a).unwrap();
    let (c2, _) = run_to(dir.path(), "a.csv", line);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(first, std::fs::read(&a).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("param,sup_norm,verdict,E0_extrapolated,gap_to_threshold,ritz_0,ritz_1\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn study_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run_to(dir.path(), "c.json", "converge --h 0.25 --L 4 --levels 3");
    assert_eq!(code, 0);
    let v = read_json(&out);
    assert_eq!(v["records"].as_array().unwrap().len(), 3);
    assert!(v["observed_order"].is_number());

    let (code, out) = run_to(dir.path(), "p.json", "probe-essential --h 0.25 --L 4 --lengths 4,8,12");
    assert_eq!(code, 0);
    assert_eq!(read_json(&out)["rows"].as_array().unwrap().len(), 3);

    let (code, out) = run_to(dir.path(), "d.json", "detect --h 0.125 --L 6 --sigma 0");
    assert_eq!(code, 0);
    assert_eq!(read_json(&out)["exists"], "Yes");
}
