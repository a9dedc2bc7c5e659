use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn codedpir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codedpir"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_decimal_column_files() {
    let o = codedpir(&["analyze", "--code", &fixture("c3.txt")]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("d_3=5"), "{s}");
    assert!(s.contains("min kappa/nu: 3/5"), "{s}");

    let o = codedpir(&["analyze", "--code", &fixture("c4.json"), "--out", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["weight_hierarchy"][2], 4);
    assert_eq!(v["min_ratio"], "3/4");
}

#[test]
fn analyze_with_flags_on_a_bare_column_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c3.csv");
    std::fs::write(&path, "1,2,4,8,8,14,5\n").unwrap();
    let p = path.to_str().unwrap();
    let o = codedpir(&[
        "analyze", "--code", p, "--q", "2", "--k", "4", "--format", "decimal",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("d_3=5"));
    // without --k the columns are ambiguous
    let o = codedpir(&["analyze", "--code", p, "--format", "decimal"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_repetition_is_capacity_achieving() {
    let o = codedpir(&["analyze", "--code", "repetition2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("capacity-achieving: yes"));
}

#[test]
fn analyze_reports_direct_sum_parts() {
    let o = codedpir(&["analyze", "--code", &fixture("c1.txt")]);
    let s = stdout(&o);
    assert!(s.contains("{1,2,4} [3,2] capacity-achieving=yes"), "{s}");
    assert!(s.contains("{3,5} [2,1] capacity-achieving=yes"), "{s}");
}

#[test]
fn rate_table_rows() {
    let o = codedpir(&[
        "rate-table",
        "--code",
        &fixture("c1.txt"),
        "--code",
        &fixture("c2.txt"),
        "--code",
        &fixture("c3.txt"),
        "--code",
        &fixture("c4.json"),
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "code,kappa/nu,R_S,R_A,R_B,R_C,C");
    assert_eq!(lines[1], "c1,2/3,0.3,0.3333,0.375,-,0.4");
    assert_eq!(lines[2], "c2,2/3,0.2778,0.3333,-,0.3571,0.4444");
    assert_eq!(lines[3], "c3,3/5,0.381,0.4,-,-,0.4286");
    assert_eq!(lines[4], "c4,3/4,0.1818,0.25,-,-,0.4545");
}

#[test]
fn rate_table_two_files() {
    let o = codedpir(&["rate-table", "--code", &fixture("c1.txt"), "--files", "2"]);
    let s = stdout(&o);
    assert_eq!(s.lines().nth(1), Some("c1,2/3,0.54,0.6,0.6207,-,0.625"));
}

#[test]
fn rate_table_empty_and_failing_inputs() {
    let o = codedpir(&["rate-table"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 0\n1 0\n").unwrap();
    let o = codedpir(&[
        "rate-table",
        "--code",
        bad.to_str().unwrap(),
        "--code",
        "c1",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("C1,2/3"), "{s}");
    assert!(s.contains("error"), "{s}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("rank"));
}

#[test]
fn rate_table_with_external_schedule() {
    let o = codedpir(&[
        "rate-table",
        "--code",
        "c3",
        "--schedule",
        &fixture("table2_schedule.json"),
        "--out",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // a [9,5] schedule does not fit a [7,4] code
    assert!(v["rows"][0]["schedule"].is_null());
}

#[test]
fn simulate_protocol_a() {
    let o = codedpir(&[
        "simulate",
        "--code",
        &fixture("c1.txt"),
        "--protocol",
        "a",
        "--files",
        "2",
        "--seed",
        "17",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("total download: 45"), "{s}");
    assert!(s.contains("rate: 3/5 (0.6)"), "{s}");
    assert!(s.contains("recovery: pass"));
    assert!(s.contains("privacy: pass"));
}

#[test]
fn simulate_schedule() {
    let o = codedpir(&[
        "simulate",
        "--code",
        &fixture("c2.txt"),
        "--protocol",
        "schedule",
        "--schedule",
        &fixture("table2_schedule.json"),
        "--files",
        "2",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("total download: 14"), "{s}");
    assert!(s.contains("rate: 5/14"), "{s}");
}

#[test]
fn simulate_direct_sum() {
    let o = codedpir(&[
        "simulate",
        "--code",
        "c1",
        "--protocol",
        "b-p2",
        "--out",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rate"], "3/8");
    assert_eq!(v["recovered"], true);
}

#[test]
fn transcripts_replay_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let o = codedpir(&[
            "simulate",
            "--code",
            "c2",
            "--protocol",
            "p2",
            "--seed",
            "99",
            "--target",
            "2",
            "--transcript",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = codedpir(&[
        "simulate",
        "--code",
        "c2",
        "--protocol",
        "p2",
        "--seed",
        "100",
        "--target",
        "2",
        "--out",
        "json",
    ]);
    assert_ne!(o.stdout, std::fs::read(&a).unwrap());
}

#[test]
fn exit_codes() {
    // parse
    assert_eq!(
        codedpir(&["simulate", "--code", "missing-file", "--protocol", "p1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        codedpir(&["simulate", "--code", "c1", "--protocol", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        codedpir(&[
            "simulate",
            "--code",
            "c1",
            "--protocol",
            "p1",
            "--target",
            "3"
        ])
        .status
        .code(),
        Some(2)
    );
    // infeasible
    assert_eq!(
        codedpir(&["simulate", "--code", "c2", "--protocol", "b-p1"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        codedpir(&[
            "simulate",
            "--code",
            "c1",
            "--protocol",
            "p1",
            "--beta",
            "4"
        ])
        .status
        .code(),
        Some(3)
    );
    // verification: an unmasked schedule leaks the requested file
    let dir = tempfile::tempdir().unwrap();
    let leak = dir.path().join("leak.json");
    std::fs::write(
        &leak,
        r#"{"beta": 1, "nodes": [
            [[{"kind": "desired", "stripe": 1, "coord": 1}]],
            [[{"kind": "desired", "stripe": 1, "coord": 2}]],
            [[{"kind": "desired", "stripe": 1, "coord": 3}]],
            [], []]}"#,
    )
    .unwrap();
    let o = codedpir(&[
        "simulate",
        "--code",
        "c1",
        "--protocol",
        "schedule",
        "--schedule",
        leak.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("privacy: FAIL at nodes [1, 2, 3]"));
}
