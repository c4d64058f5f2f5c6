use std::path::Path;
use std::process::{Command, Output};

fn gpsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpsat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&gpsat(&["build", "--q", "4", "--full-space", "--seed", "1"])), 1);
    assert_eq!(code(&gpsat(&["nonsense"])), 1);
    assert_eq!(code(&gpsat(&["sweep", "--q", "5", "--p-steps", "0", "--seed", "1"])), 1);
    assert_eq!(code(&gpsat(&["build", "--q", "5", "--seed", "1"])), 1);
    assert_eq!(code(&gpsat(&["sweep", "--q", "5", "--p", "1.5", "--seed", "1"])), 1);
    assert_eq!(code(&gpsat(&["--help"])), 0);
}

#[test]
fn missing_files_exit_three() {
    let o = gpsat(&["verify", "--input", "/nonexistent/dump.txt"]);
    assert_eq!(code(&o), 3);
    let o = gpsat(&["alpha", "--input", "/nonexistent/points.txt", "--seed", "1"]);
    assert_eq!(code(&o), 3);
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.txt");
    std::fs::write(&bad, "5 3 2 1\n0 0 0\n").unwrap();
    assert_eq!(code(&gpsat(&["verify", "--input", &bad])), 3);
}

#[test]
fn seed_comes_first() {
    let o = gpsat(&["chernoff", "--seed", "42", "--samples", "1000"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().next(), Some("seed 42"));
    let o = gpsat(&["alpha", "--q", "3", "--full-space", "--samples-typo"]);
    assert_eq!(code(&o), 1);
    let o = gpsat(&["chernoff", "--samples", "10"]);
    assert!(stdout(&o).starts_with("seed "));
}

#[test]
fn alpha_of_order_three_space() {
    let o = gpsat(&["alpha", "--q", "3", "--full-space", "--exact", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["alpha"], 5);
    assert_eq!(v["optimal"], true);
}

#[test]
fn alpha_reads_point_tables_and_writes_witness() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "u.txt");
    std::fs::write(&input, "5 3\n0 0 0\n0 0 1\n0 1 0\n0 1 1\n1 2 3\n").unwrap();
    let out = path(dir.path(), "w.txt");
    let o = gpsat(&["alpha", "--input", &input, "--exact", "--seed", "1", "--out", &out]);
    assert_eq!(code(&o), 0);
    let w = std::fs::read_to_string(&out).unwrap();
    assert!(w.starts_with("5 3\n"));
    assert_eq!(w.lines().count(), 1 + 4);
}

#[test]
fn build_then_verify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let dump = path(dir.path(), "h.txt");
    let o = gpsat(&["build", "--q", "5", "--full-space", "--seed", "9", "--out", &dump]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(format!("{dump}.report.json")).unwrap();
    assert!(report.contains("\"pass\": true"));
    let rep = path(dir.path(), "v.json");
    let v = gpsat(&["verify", "--input", &dump, "--out", &rep]);
    assert_eq!(code(&v), 0);
    assert_eq!(std::fs::read_to_string(&rep).unwrap(), report);
    assert_eq!(stdout(&v), report);
}

#[test]
fn failed_targets_exit_two() {
    let o = gpsat(&["build", "--q", "5", "--random", "0.5", "--seed", "2", "--c-samp", "1e-9", "--retries", "1", "--eps-dense", "0.9"]);
    // Tiny sampling multiplier leaves too few edges for the size target.
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).split_once('\n').unwrap().1).unwrap();
    assert_eq!(v["pass"], false);
    assert_eq!(v["attempts"], 1);
}

#[test]
fn tampered_dump_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let dump = path(dir.path(), "h.txt");
    assert_eq!(code(&gpsat(&["build", "--q", "5", "--full-space", "--seed", "3", "--out", &dump])), 0);
    let text = std::fs::read_to_string(&dump).unwrap();
    std::fs::write(&dump, text.replace("# case DENSE", "# case CASE1")).unwrap();
    assert_eq!(code(&gpsat(&["verify", "--input", &dump])), 1);
}

#[test]
fn sweep_row_contract() {
    let o = gpsat(&["sweep", "--q", "5", "--trials", "3", "--p-steps", "6", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "seed 3");
    assert_eq!(lines[1], "q,d,p,trial,seed,sample_size,alpha_lower,alpha_deletion,exact,elapsed_ms");
    assert_eq!(lines.len(), 2 + 6 * 3 + 6);
    assert_eq!(lines.iter().filter(|l| l.split(',').nth(3) == Some("-1")).count(), 6);

    let o = gpsat(&["sweep", "--q", "7", "--p", "1", "--trials", "1", "--seed", "3"]);
    let out = stdout(&o);
    let record: Vec<&str> = out.lines().nth(2).unwrap().split(',').collect();
    let alpha: u32 = record[6].parse().unwrap();
    assert!((7..=21).contains(&alpha), "{alpha}");
}

#[test]
fn chernoff_reports_bound_and_frequency() {
    let o = gpsat(&["chernoff", "--mu", "1", "--h", "20", "--seed", "5", "--samples", "100000"]);
    assert_eq!(code(&o), 0);
    let row: serde_json::Value = serde_json::from_str(stdout(&o).lines().nth(1).unwrap()).unwrap();
    let bound = row["bound"].as_f64().unwrap();
    assert!((bound - 2.0 * (-10f64).exp()).abs() < 1e-15);
    assert!(row["empirical"].as_f64().unwrap() <= bound);
}
