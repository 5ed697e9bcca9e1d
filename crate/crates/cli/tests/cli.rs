use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_btl-topk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn btl-topk")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_rank_recovers_two_level_top_set() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.txt");
    let out = run(&["simulate", "--n", "60", "--p", "0.5", "--L", "50", "--delta", "0.5", "-k", "5", "--seed", "3", "--out", path(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&data).unwrap().starts_with("60 50\n"));

    for method in ["spectral", "mle", "mle-unregularized"] {
        let out = run(&["rank", "--input", path(&data), "--method", method, "-k", "5"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 5);
        assert!(first_line_keys_ordered(&data, method));
        let mut items: Vec<u64> = lines.iter().map(|v| v["item"].as_u64().unwrap()).collect();
        items.sort_unstable();
        assert_eq!(items, vec![0, 1, 2, 3, 4], "{method}");
        for (r, v) in lines.iter().enumerate() {
            assert_eq!(v["rank"].as_u64().unwrap(), r as u64 + 1);
            assert!(v["score"].is_f64());
        }
    }

    let out = run(&["rank", "--input", path(&data)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 60);
}

#[test]
fn population_file_round_trips_through_rank() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pop.txt");
    let scores = dir.path().join("w.txt");
    let out = run(&["simulate", "--n", "8", "--p", "1", "--population", "--out", path(&data), "--scores-out", path(&scores)]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&data).unwrap().starts_with("8 inf\n"));
    let w: Vec<f64> = std::fs::read_to_string(&scores).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    let out = run(&["rank", "--input", path(&data)]);
    let first: serde_json::Value = serde_json::from_str(String::from_utf8(out.stdout).unwrap().lines().next().unwrap()).unwrap();
    let best = (0..8).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    assert_eq!(first["item"].as_u64().unwrap() as usize, best);
}

const CONFIG: &str = r#"
n = 30
p = 0.5
L = [5, 20]
K = 3
trials = 3
seed = 9
methods = ["spectral", "mle"]
[scores]
mode = "uniform_half_one"
"#;

#[test]
fn experiment_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let summary = dir.path().join("s.csv");
    let plot = dir.path().join("s.gp");
    let out = run(&["experiment", "--config", path(&cfg), "--out", path(&a), "--threads", "1", "--quiet", "--summary", path(&summary), "--gnuplot", path(&plot)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
    let out = run(&["experiment", "--config", path(&cfg), "--out", path(&b), "--threads", "4"]);
    assert!(out.status.success());
    assert!(!out.stderr.is_empty());
    let body = |p: &Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# generated"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&a), body(&b));
    assert_eq!(body(&a).lines().count(), 1 + 2 * 3 * 2);
    assert!(body(&a).starts_with("n,p,L,K,delta,method,trial,"));
    assert_eq!(std::fs::read_to_string(&summary).unwrap().lines().count(), 1 + 4);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("plot "));

    let c = dir.path().join("c.csv");
    run(&["experiment", "--config", path(&cfg), "--out", path(&c), "--seed", "10", "--quiet"]);
    assert_ne!(body(&a), body(&c));
}

#[test]
fn check_theory_reports_json() {
    let out = run(&["check-theory", "--trials", "50", "--max-n", "8", "--n", "200", "--delta", "0.4", "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["perturbation"]["applicable"], 50);
    assert_eq!(v["perturbation"]["violations"], 0);
    let th = v["thresholds"].as_array().unwrap();
    assert_eq!(th.len(), 5);
    assert_eq!(th[0]["which"], "upper_fixed_kappa");
    assert_eq!(th[0]["connectivity"], true);
    assert!(th[3]["connectivity"].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, CONFIG.replace("trials = 3", "trials = 0")).unwrap();
    assert_eq!(run(&["experiment", "--config", path(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "--config", path(&dir.path().join("missing.toml"))]).status.code(), Some(3));
    assert_eq!(run(&["simulate", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["check-theory", "--trials", "1", "--eps", "0.7"]).status.code(), Some(2));

    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "3 10\n0 1 0.5 5\n").unwrap();
    assert_eq!(run(&["rank", "--input", path(&junk)]).status.code(), Some(2));

    let split = dir.path().join("split.txt");
    std::fs::write(&split, "4 2\n0 1 0.5 1\n1 0 0.5 1\n2 3 0.5 1\n3 2 0.5 1\n").unwrap();
    let out = run(&["rank", "--input", path(&split)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disconnected"));
}

fn first_line_keys_ordered(data: &Path, method: &str) -> bool {
    let out = run(&["rank", "--input", path(data), "--method", method, "-k", "1"]);
    let line = String::from_utf8(out.stdout).unwrap();
    line.starts_with("{\"rank\":1,\"item\":") && line.contains(",\"score\":")
}
