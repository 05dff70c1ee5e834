use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exposim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exposim"))
        .args(args)
        .output()
        .unwrap()
}

fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/german.data")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn toy_prints_the_paradox() {
    let out = exposim(&["toy"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "producer,deterministic,randomized_mc,randomized_exact"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[1] == "1"));
    let j = &rows[9];
    assert_eq!(j[0], "J");
    assert!((j[2].parse::<f64>().unwrap() - 2.5).abs() < 0.03);
    assert_eq!(j[3], "2.5");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        "n_users = 300\nm_items = 200\nk = 20\nell = 5\nseed = 4\ntrials = 3\n",
    );
    let args = [
        "simulate",
        "--config",
        &config,
        "--policy",
        "pl_icfw",
        "--alpha",
        "0.5",
        "--beta-rule",
        "0.35",
    ];
    let a = exposim(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, exposim(&args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 + 1);
    assert!(text
        .lines()
        .nth(4)
        .unwrap()
        .starts_with("pl_icfw,0.5,0.175,,4,mean,"));
}

#[test]
fn sweep_output_is_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        "n_users = 300\nm_items = 200\nk = 20\nell = 5\ntrials = 2\n",
    );
    let spec = write(
        dir.path(),
        "spec.toml",
        "[[sweep]]\nfamily = \"scaled_pl\"\ngrid = [0.0, 0.5, 2.0]\n\n[[sweep]]\nfamily = \"pl_icfw\"\ngrid = \"default\"\n",
    );
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.path().join(format!("out{jobs}.csv"));
        let status = exposim(&[
            "--jobs",
            jobs,
            "sweep",
            "--config",
            &config,
            "--spec",
            &spec,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let means = String::from_utf8(outputs.remove(0))
        .unwrap()
        .lines()
        .filter(|l| l.contains(",mean,"))
        .count();
    assert_eq!(means, 3 + 29);
}

#[test]
fn german_writes_universe_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.toml",
        "trials = 1\n[[sweep]]\nfamily = \"deterministic\"\n",
    );
    let universe = dir.path().join("universe.csv");
    let results = dir.path().join("results.csv");
    let out = exposim(&[
        "german",
        "--data",
        data_path().to_str().unwrap(),
        "--spec",
        &spec,
        "--universe-out",
        universe.to_str().unwrap(),
        "--out",
        results.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::read_to_string(universe).unwrap().lines().count(),
        201
    );
    assert!(std::fs::read_to_string(results)
        .unwrap()
        .contains("deterministic,,,,0,mean,"));
}

#[test]
fn external_scores_replace_relevance() {
    let dir = tempfile::tempdir().unwrap();
    let scores: String = std::iter::once("item_id,score".to_string())
        .chain((0..50).map(|i| format!("{i},{}", i as f64 / 50.0)))
        .collect::<Vec<_>>()
        .join("\n");
    let scores = write(dir.path(), "scores.csv", &scores);
    let config = write(
        dir.path(),
        "run.toml",
        &format!(
            "n_users = 100\nm_items = 50\nk = 10\nell = 3\nn_popular = 5\nscores = {scores:?}\n"
        ),
    );
    let out = exposim(&["simulate", "--config", &config, "--policy", "deterministic"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        exposim(&["simulate", "--policy", "scaled_pl"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        exposim(&["simulate", "--policy", "sorted"]).status.code(),
        Some(1)
    );
    assert_eq!(exposim(&["frobnicate"]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "k = 5000\n");
    assert_eq!(exposim(&["sweep", "--config", &bad]).status.code(), Some(1));
    assert_eq!(
        exposim(&["german", "--data", "/nonexistent"]).status.code(),
        Some(2)
    );
    let short = write(dir.path(), "short.data", "A11 6 A34\n");
    assert_eq!(
        exposim(&["german", "--data", &short]).status.code(),
        Some(2)
    );
    assert_eq!(exposim(&["--help"]).status.code(), Some(0));
}
