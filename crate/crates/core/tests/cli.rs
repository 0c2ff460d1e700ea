use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn addrloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_addrloc"))
        .args(args)
        .output()
        .expect("run addrloc")
}

fn ok(args: &[&str]) -> String {
    let out = addrloc(args);
    assert!(
        out.status.success(),
        "addrloc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn gen_cyclic(dir: &Path, k: usize, len: usize) -> PathBuf {
    let path = dir.join("cyclic.tsv");
    ok(&["gen", "--cyclic", &k.to_string(), "--length", &len.to_string(), "--seed", "7", "--out", p(&path)]);
    path
}

#[test]
fn summarize_two_line_fixture() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("two.tsv");
    fs::write(&path, "0\tA\tB\n5\tB\tA\n").unwrap();
    let out = ok(&["summarize", p(&path)]);
    assert!(out.starts_with("frames=2 addresses=2 destinations=2"), "{out}");
}

#[test]
fn gen_cyclic_then_stackdist_puts_mass_at_cycle_length() {
    let dir = TempDir::new().unwrap();
    let trace = gen_cyclic(dir.path(), 30, 10_000);
    let out = ok(&["stackdist", p(&trace)]);
    let table = rows(&out);
    assert_eq!(table[0], ["distance", "count", "pdf", "cdf"]);
    let body = &table[1..];
    assert_eq!(body.len(), 31);
    for row in &body[..29] {
        assert_eq!(row[1], "0");
    }
    assert_eq!(body[29][0], "30");
    assert_eq!(body[29][1], "9970");
    assert_eq!(body[30], ["inf", "30", "0.003", "1"]);

    let naive = ok(&["stackdist", p(&trace), "--naive"]);
    assert_eq!(naive, out);
}

#[test]
fn simulate_writes_two_policy_tables() {
    let dir = TempDir::new().unwrap();
    let trace = gen_cyclic(dir.path(), 5, 200);
    let out_dir = dir.path().join("sim");
    ok(&[
        "simulate",
        p(&trace),
        "--policies",
        "MIN,LRU,FIFO,RAND",
        "--capacities",
        "1,2,4,8",
        "--seed",
        "1",
        "--out-dir",
        p(&out_dir),
    ]);
    for name in ["miss_ratio.csv", "interfault.csv"] {
        let table = rows(&fs::read_to_string(out_dir.join(name)).unwrap());
        assert_eq!(table.len(), 5, "{name}");
        assert_eq!(table[0], ["capacity", "MIN", "LRU", "FIFO", "RAND"]);
        assert!(table[1..].iter().all(|r| r.len() == 5));
    }
    let miss = rows(&fs::read_to_string(out_dir.join("miss_ratio.csv")).unwrap());
    // capacity 8 holds all 5 addresses: compulsory misses only
    assert!(miss[4][1..].iter().all(|v| num(v) == 5.0 / 200.0));
    // capacity 4 < cycle length: LRU and FIFO miss every time
    assert_eq!(miss[3][2], "1");
    assert_eq!(miss[3][3], "1");
}

#[test]
fn wss_runs_and_concentration_emit_csv() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.tsv");
    fs::write(&trace, "0\tS\tA\n1\tS\tA\n2\tS\tB\n3\tS\tA\n").unwrap();

    let wss = ok(&["wss", p(&trace), "--windows", "2,4", "--mode", "sliding"]);
    assert_eq!(wss, "window,mode,avg\n2,sliding,1.6666666666666667\n4,sliding,2\n");

    let runs = ok(&["runs", p(&trace)]);
    assert_eq!(runs, "length,count,frequency\n1,2,0.6666666666666666\n2,1,0.3333333333333333\n");

    let conc = ok(&["concentration", p(&trace)]);
    assert_eq!(conc, "dest_fraction,frame_fraction\n0.5,0.75\n1,1\n");

    let out = addrloc(&["wss", p(&trace), "--windows", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn split_separates_interleaved_protocols() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"model": {"kind": "interleave", "streams": [
              {"model": {"kind": "cyclic", "period": 4}, "frames": 1, "proto": "LAT"},
              {"model": {"kind": "uniform_irm", "addresses": 6}, "frames": 3}
           ]},
           "length": 400, "seed": 3}"#,
    )
    .unwrap();
    let trace = dir.path().join("mixed.tsv");
    ok(&["gen", "--spec", p(&spec), "--out", p(&trace)]);
    let (lat, rest) = (dir.path().join("lat.tsv"), dir.path().join("rest.tsv"));
    ok(&["split", p(&trace), "--proto", "LAT", "--matching", p(&lat), "--rest", p(&rest)]);
    assert!(ok(&["summarize", p(&lat)]).starts_with("frames=100 addresses=5 destinations=4"));
    assert!(ok(&["summarize", p(&rest)]).starts_with("frames=300 "));

    let lat_stack = rows(&ok(&["stackdist", p(&lat)]));
    assert_eq!(lat_stack[4], ["4", "96", "0.96", "0.96"]);
}

#[test]
fn report_tables_are_mutually_consistent() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("lsm.tsv");
    ok(&["gen", "--lsm", "0.4,0.3,0.2,0.1", "--stack-size", "12", "--length", "3000", "--seed", "2", "--out", p(&trace)]);
    let out_dir = dir.path().join("report");
    ok(&["report", p(&trace), "--out-dir", p(&out_dir), "--seed", "9"]);

    for name in [
        "summary.txt",
        "concentration.csv",
        "concentration_quantiles.csv",
        "runs.csv",
        "wss.csv",
        "stackdist.csv",
        "stack_levels.csv",
        "miss_ratio.csv",
        "interfault.csv",
        "searchtime.csv",
    ] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
    let read = |name: &str| rows(&fs::read_to_string(out_dir.join(name)).unwrap());
    let miss = read("miss_ratio.csv");
    let inter = read("interfault.csv");
    let search = read("searchtime.csv");
    assert_eq!(miss[0], inter[0]);
    assert_eq!(miss[0], search[0]);

    let n = num(miss.last().unwrap()[0].as_str());
    let cost = |m: f64| 1.0 + m.log2();
    for ((m, i), s) in miss[1..].iter().zip(&inter[1..]).zip(&search[1..]) {
        let c = num(&m[0]);
        for col in 1..m.len() {
            let (pm, pi, ps) = (num(&m[col]), num(&i[col]), num(&s[col]));
            if pm > 0.0 {
                assert!((pi * pm - 1.0).abs() <= 1e-12);
            } else {
                assert!(pi.is_infinite());
            }
            assert!((ps - (cost(c) / cost(n) + pm)).abs() <= 1e-12);
        }
    }
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("LRU: optimal cache size"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("u.tsv");
    ok(&["gen", "--uniform", "40", "--length", "5000", "--seed", "11", "--out", p(&trace)]);
    let again = dir.path().join("u2.tsv");
    ok(&["gen", "--uniform", "40", "--length", "5000", "--seed", "11", "--out", p(&again)]);
    assert_eq!(fs::read(&trace).unwrap(), fs::read(&again).unwrap());

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["report", p(&trace), "--out-dir", p(d), "--seed", "4"]);
    }
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn errors_and_usage() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "5\tA\tB\n0\tB\tA\n").unwrap();
    let out = addrloc(&["summarize", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(addrloc(&["nonsense"]).status.code(), Some(2));
    assert_eq!(addrloc(&["simulate"]).status.code(), Some(2));
    assert_eq!(addrloc(&["gen", "--length", "3"]).status.code(), Some(1));

    let trace = gen_cyclic(dir.path(), 3, 30);
    let out = addrloc(&["simulate", p(&trace), "--policies", "CLOCK", "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let out = addrloc(&["searchtime", p(&trace), "--capacities", "1,8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(ok(&["searchtime", p(&trace), "--capacities", "1,8", "--database-size", "8"]).starts_with("capacity,MIN"));
}
