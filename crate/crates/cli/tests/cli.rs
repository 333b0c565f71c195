use std::path::Path;
use std::process::{Command, Output};

use sgb_cli::output::JsonOutput;
use sgb_core::Policy;
use tempfile::TempDir;

const FIXTURE_F: &str = "x,y\n0,0\n3,0\n5,0\n10,0\n13,0\n15,0\n30,0\n33,0\n";
const NEW_GROUP: &str = "SELECT min(x), count(*) FROM f GROUP BY x, y DISTANCE-TO-ALL L2 WITHIN 6 ON-OVERLAP NEW-GROUP";

fn sgb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgb")).args(args).output().expect("binary runs")
}

fn fixture(dir: &TempDir) -> String {
    let path = dir.path().join("f.csv");
    std::fs::write(&path, FIXTURE_F).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn new_group_query_gives_four_rows() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let o = sgb(&["run", "--input", &input, "--query", NEW_GROUP, "--output", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "{text}");
    assert_eq!(lines[0], "gid,members,min(x),count(*)");
    assert_eq!(lines[2], "1,2 3,5,2");
}

#[test]
fn json_output_round_trips_to_a_group_set() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let o = sgb(&["run", "--input", &input, "--columns", "x,y", "--eps", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let parsed: JsonOutput = serde_json::from_str(&stdout(&o)).unwrap();
    let gs = parsed.to_group_set().unwrap();
    assert_eq!(gs.policy, Policy::Duplicate);
    assert_eq!(gs.groups, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![6, 7]]);
    assert_eq!(gs.oset, vec![2, 3]);
}

#[test]
fn oracle_matches_run() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    for policy in ["duplicate", "eliminate", "new-group"] {
        let args = ["--input", &input, "--columns", "x", "--eps", "6", "--on-overlap", policy];
        let run = sgb(&[&["run"], &args[..]].concat());
        let oracle = sgb(&[&["oracle"], &args[..]].concat());
        assert_eq!(stdout(&run), stdout(&oracle), "{policy}");
        let slow = sgb(&[&["run"], &args[..], &["--no-index", "--no-bounds"]].concat());
        assert_eq!(stdout(&run), stdout(&slow), "{policy}");
    }
}

#[test]
fn missing_file_exits_1() {
    let o = sgb(&["run", "--input", "/nonexistent/nope.csv", "--columns", "x", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));
}

#[test]
fn bad_query_exits_2_with_position() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let o = sgb(&["run", "--input", &input, "--query", "SELECT min(x) FROM f GROUP BY x WITHIN 1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position 32"));

    let o = sgb(&["run", "--input", &input, "--columns", "z", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("'z'"));
}

#[test]
fn check_passes_sampled_and_exhaustive() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let o = sgb(&["check", "--input", &input, "--query", NEW_GROUP]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS: 51 orders"));

    let small = dir.path().join("small.csv");
    std::fs::write(&small, "x\n0\n1\n2\n3\n").unwrap();
    let o = sgb(&["check", "--input", small.to_str().unwrap(), "--columns", "x", "--eps", "1", "--exhaustive"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS: 24 orders"));
}

#[test]
fn injected_order_bug_is_caught() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let o = sgb(&["check", "--input", &input, "--columns", "x", "--eps", "6", "--inject-order-bug"]);
    assert_eq!(o.status.code(), Some(4));
    let text = stdout(&o);
    assert!(text.starts_with("FAIL"));
    assert!(text.contains("order B:"));
}

#[test]
fn same_input_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let a = sgb(&["run", "--input", &input, "--query", NEW_GROUP]);
    let b = sgb(&["run", "--input", &input, "--query", NEW_GROUP]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bench_tiny_eps_gives_singletons() {
    let o = sgb(&["bench", "--sizes", "200", "--clusters", "1", "--eps", "1e-9", "--no-baseline"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(&row[..3], &["200", "200", "1.00"]);
}

#[test]
fn ragged_csv_exits_1() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y\n1,2\n3\n").unwrap();
    let o = sgb(&["run", "--input", Path::new(&path).to_str().unwrap(), "--columns", "x", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}
