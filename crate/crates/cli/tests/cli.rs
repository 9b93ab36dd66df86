use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kfactor")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let k6 = path(dir.path(), "k6.json");
    let e4 = path(dir.path(), "e4.json");
    assert_eq!(code(&kfactor(&["gen", "--out", &k6, "complete", "--n", "6"])), 0);
    assert_eq!(code(&kfactor(&["gen", "--out", &e4, "empty", "--n", "4"])), 0);

    let found = kfactor(&["solve", "--host", &k6, "--r", "3"]);
    assert_eq!(code(&found), 0);
    let v: serde_json::Value = serde_json::from_slice(&found.stdout).unwrap();
    assert_eq!(v["status"], "found");
    assert_eq!(v["cliques"].as_array().unwrap().len(), 2);

    assert_eq!(code(&kfactor(&["solve", "--host", &e4, "--r", "2"])), 1);
    assert_eq!(code(&kfactor(&["solve", "--host", &k6, "--r", "3", "--budget", "1"])), 2);
    // every Z vertex in its own triangle: {0,1,2} may hold only one of them
    let z = path(dir.path(), "z.json");
    fs::write(&z, "[0, 1, 2, 3]").unwrap();
    assert_eq!(code(&kfactor(&["solve", "--host", &k6, "--r", "3", "--z-file", &z])), 1);
}

#[test]
fn errors_exit_three() {
    let o = kfactor(&["solve", "--host", "/nonexistent/g.json", "--r", "2"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(code(&kfactor(&["balance", "--lemma", "nope", "--sizes", "1,2", "--m", "1", "--s", "1", "--t", "0"])), 3);
}

#[test]
fn balance_equalize() {
    let o = kfactor(&["balance", "--lemma", "equalize", "--sizes", "39,40,21", "--m", "2", "--s", "2", "--t", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["post"], serde_json::json!([38, 38, 19]));
    assert_eq!(v["moves"][0]["type"], "P");
}

#[test]
fn tile_run_certificate_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let host = path(dir.path(), "g.json");
    let cert = path(dir.path(), "cert.json");
    let trace = path(dir.path(), "trace.json");
    assert_eq!(code(&kfactor(&["--seed", "5", "gen", "--out", &host, "gnp", "--n", "20", "--p", "0.6"])), 0);
    let o = kfactor(&["tile", "run", "--host", &host, "--m", "2", "--s", "2", "--t", "1", "--cert", &cert, "--trace", &trace]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let steps = report["steps"].as_u64().unwrap();
    let tr: serde_json::Value = serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(tr.as_array().unwrap().len() as u64, steps);
    assert_eq!(code(&kfactor(&["tile", "verify", "--cert", &cert])), 0);
}

#[test]
fn sweep_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let csv = path(dir.path(), &format!("s{threads}.csv"));
        let json = path(dir.path(), &format!("s{threads}.json"));
        let args = [
            "--seed", "42", "--threads", threads, "--out", &csv, "sweep", "--host-kind", "extremal", "--n", "24", "--alpha",
            "1/2", "--r", "3", "--trials", "40", "--grid", "0.02,0.05,0.1,0.2", "--json", &json,
        ];
        let o = kfactor(&args);
        assert!(matches!(code(&o), 0 | 2), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(&csv).unwrap(), fs::read(&json).unwrap())
    };
    let (c1, j1) = run("1");
    let (c8, j8) = run("8");
    assert_eq!(c1, c8);
    assert_eq!(j1, j8);
    let text = String::from_utf8(c1).unwrap();
    assert!(text.starts_with("n,p,successes,trials,indeterminates\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn tile_run_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let host = path(dir.path(), "g.json");
    assert_eq!(code(&kfactor(&["--seed", "9", "gen", "--out", &host, "gnp", "--n", "30", "--p", "0.5"])), 0);
    let run = |threads: &str| {
        let out = path(dir.path(), &format!("t{threads}.json"));
        let trace = path(dir.path(), &format!("tr{threads}.json"));
        let args =
            ["--threads", threads, "--out", &out, "tile", "run", "--host", &host, "--m", "3", "--s", "2", "--t", "1", "--trace", &trace];
        assert_eq!(code(&kfactor(&args)), 0);
        (fs::read(&out).unwrap(), fs::read(&trace).unwrap())
    };
    assert_eq!(run("1"), run("8"));
}

#[test]
fn sweep_refuses_oversized_without_force() {
    let o = kfactor(&["sweep", "--host-kind", "empty", "--n", "63", "--r", "3", "--trials", "1", "--grid", "0.5"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
}
