use std::process::{Command, Output};

use serde_json::Value;

fn linnik(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linnik")).args(args).env_remove("LINNIK_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV run, without the comment and column lines.
fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    let text = stdout(o);
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn enumerate_d5_json_lists_24_vectors() {
    let o = linnik(&["enumerate", "--d", "5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["schema"]["columns"], serde_json::json!(["d", "x", "y", "z"]));
    assert_eq!(lines[0]["schema"]["version"], Value::from(linnik_core::VERSION));
    let vs: Vec<[i64; 3]> = lines[1..]
        .iter()
        .map(|v| [v["x"].as_i64().unwrap(), v["y"].as_i64().unwrap(), v["z"].as_i64().unwrap()])
        .collect();
    assert_eq!(vs.len(), 24);
    assert!(vs.iter().all(|v| v.iter().map(|c| c * c).sum::<i64>() == 5));
    let mut sorted = vs.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 24);
}

#[test]
fn enumerate_d7_is_empty() {
    let o = linnik(&["enumerate", "--d", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(csv_rows(&o).is_empty());
    let text = stdout(&o);
    assert!(text.starts_with("# {"));
    assert_eq!(text.lines().nth(1), Some("d,x,y,z"));
}

#[test]
fn coset_check_squarefree_to_2000() {
    let o = linnik(&["coset-check", "--dmin", "4", "--dmax", "2000", "--squarefree"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&o);
    assert!(rows.len() > 900);
    assert!(rows.iter().all(|r| r[7] == "true"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_linnik"))
            .args(["weyl", "--dmin", "50", "--dmax", "400", "--admissible", "--format", "json", "--output"])
            .arg(&path)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(&path).unwrap()
    };
    // same config, including the output path
    let a = run("w.jsonl");
    let b = run("w.jsonl");
    assert!(!a.is_empty());
    assert_eq!(a, b);

    let shapes = || stdout(&linnik(&["shapes", "--dmin", "100", "--dmax", "300"]));
    assert_eq!(shapes(), shapes());
}

#[test]
fn thread_count_does_not_change_output() {
    let with = |n: &str| {
        Command::new(env!("CARGO_BIN_EXE_linnik"))
            .args(["discrepancy", "--dmin", "100", "--dmax", "600", "--admissible"])
            .env("LINNIK_THREADS", n)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(with("1"), with("3"));
}

#[test]
fn invalid_config_gives_error_record() {
    let o = linnik(&["enumerate", "--dmin", "10", "--dmax", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    let err: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(err["error"], "invalid_config");
    assert!(err["message"].as_str().unwrap().contains("dmin"));

    for args in [
        &["weyl", "--d", "5", "--omega", "2,5"][..],
        &["weyl", "--d", "5", "--phi", "cusp:0.2"],
        &["enumerate", "--split", "4"],
        &["enumerate", "--tol", "-1"],
        &["scan", "--x", "10"],
        &["frobnicate"],
    ] {
        let o = linnik(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
        assert!(err["error"].is_string());
    }
    let o =
        Command::new(env!("CARGO_BIN_EXE_linnik")).args(["enumerate"]).env("LINNIK_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(linnik(&["--help"]).status.code(), Some(0));
    assert_eq!(linnik(&["--version"]).status.code(), Some(0));
}

#[test]
fn claim_checks_pass_on_small_ranges() {
    let g = linnik(&["gauss-check", "--dmax", "1000"]);
    assert_eq!(g.status.code(), Some(0));
    assert!(csv_rows(&g).iter().all(|r| r[4] != "false"));

    let h = linnik(&["heegner-check", "--dmax", "120", "--admissible"]);
    assert_eq!(h.status.code(), Some(0));
    assert!(csv_rows(&h).iter().all(|r| r[5] == "true"));

    let a = linnik(&["a1-check", "--dmax", "60", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(csv_rows(&a).len(), 60 * 6);
}

#[test]
fn failed_claim_exits_two() {
    // no floating-point residual meets a window this narrow
    let o = linnik(&["heegner-check", "--dmax", "300", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(csv_rows(&o).iter().any(|r| r[5] == "false"));
}

#[test]
fn filters_compose() {
    let o = linnik(&["enumerate", "--dmin", "1", "--dmax", "200", "--admissible", "--split", "3,5", "--squarefree"]);
    assert_eq!(o.status.code(), Some(0));
    let mut ds: Vec<u64> = csv_rows(&o).iter().map(|r| r[0].parse().unwrap()).collect();
    ds.dedup();
    let expected: Vec<u64> = (1..=200)
        .filter(|&d| {
            !matches!(d % 8, 0 | 4 | 7)
                && linnik_core::arith::is_squarefree(d)
                && [3u64, 5].iter().all(|&p| (1..p).any(|x| (x * x) % p == (p - d % p) % p) && d % p != 0)
        })
        .collect();
    assert_eq!(ds, expected);
}

#[test]
fn classgroup_table_for_fixed_disc() {
    let o = linnik(&["classgroup", "--disc", "-84"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[7] == "4"));
    assert_eq!(rows[0][8], "0 1 2 3");
}

#[test]
fn scan_reports_series_and_fit() {
    let fit = linnik(&["scan", "--x", "2000", "--omega", "1,0"]);
    assert_eq!(fit.status.code(), Some(0));
    let rows = csv_rows(&fit);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3], "-inf");
    assert_eq!(rows[0][5], "true");

    let series = linnik(&["scan", "--x", "2000", "--series", "--format", "json"]);
    let last: Value = serde_json::from_str(stdout(&series).lines().last().unwrap()).unwrap();
    assert_eq!(last["x"], 2000);
}
