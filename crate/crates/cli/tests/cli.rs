use std::path::Path;
use std::process::{Command, Output};

use fkqc::model::AnchorFn;
use fkqc::solver::{solve_tridiagonal, AilParams};

fn fkqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkqc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn word_examples() {
    let o = fkqc(&["word", "--level", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "abaababa");
    let o = fkqc(&["word", "--two-sided", "--from", "-5", "--to", "4"]);
    assert_eq!(stdout(&o).trim(), "ababa|abaab");
    assert_eq!(fkqc(&["word", "--level", "0"]).status.code(), Some(1));
    let o = fkqc(&["word", "--level", "6", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count_a"], 8);
    assert_eq!(v["length"]["b"], 8);
}

#[test]
fn word_cache_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_fkqc"))
            .args(["word", "--two-sided", "--from", "-3", "--to", "3"])
            .env("FKQC_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    let cached = dir.path().join("word-window--3-3.txt");
    assert_eq!(std::fs::read_to_string(&cached).unwrap(), stdout(&first));
    // a planted entry is served as-is
    std::fs::write(&cached, "ab|ab\n").unwrap();
    assert_eq!(stdout(&run()).trim(), "ab|ab");
}

#[test]
fn small_lambda_is_a_validation_error() {
    let o = fkqc(&["equilibrium", "--lambda", "0.01", "--theta", "default"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold"));
}

#[test]
fn bad_flags_exit_with_validation_code() {
    assert_eq!(fkqc(&["equilibrium", "--method", "newton"]).status.code(), Some(1));
    assert_eq!(fkqc(&["minimal", "--level", "0"]).status.code(), Some(1));
    assert_eq!(fkqc(&["equilibrium", "--theta", "x"]).status.code(), Some(1));
    assert_eq!(fkqc(&["--help"]).status.code(), Some(0));
}

#[test]
fn equilibrium_csv_round_trips() {
    let o = fkqc(&[
        "equilibrium",
        "--theta",
        "default",
        "--n",
        "100",
        "--method",
        "tridiagonal",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,x_i,g_i,h_i,residual_i"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 201);
    let direct = solve_tridiagonal(&AilParams::new(AnchorFn::default_linear(), 100), true).unwrap();
    for r in &rows {
        assert_eq!(r[1], direct.at(r[0] as i64));
        assert!(r[4].abs() < 1e-9);
    }
    let slope = (rows[200][1] - rows[0][1]) / 200.0;
    assert!((slope - 2.9271).abs() < 0.01);
}

#[test]
fn signed_square_has_no_rotation_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fkqc(&["equilibrium", "--anchor", "h1", "--n", "100", "--out", out]);
    assert!(o.status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["diagnostics"]["has_rotation_number"], false);
    assert!(m["diagnostics"]["notes"][0]
        .as_str()
        .unwrap()
        .contains("no rotation number"));
}

#[test]
fn anchor_file_matches_linear_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let h = AnchorFn::linear(2.5);
    let body: String = (-30..=30).map(|i| format!("{i},{}\n", h.value(i))).collect();
    std::fs::write(&path, format!("i,h\n{body}")).unwrap();
    let a = fkqc(&["equilibrium", "--anchor-file", path.to_str().unwrap(), "--n", "20"]);
    let b = fkqc(&["equilibrium", "--theta", "2.5", "--n", "20"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        fkqc(&["equilibrium", "--anchor-file", path.to_str().unwrap(), "--n", "40"])
            .status
            .code(),
        Some(1)
    );
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn runs_are_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let jobs = if d == &a { "1" } else { "2" };
        let o = fkqc(&[
            "minimal",
            "--level",
            "2,3",
            "--window",
            "30",
            "--seed",
            "7",
            "--jobs",
            jobs,
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(files(&a), files(&b));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 4);
    let o = fkqc(&["replay", a.join("manifest.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().all(|l| l.starts_with("identical")));
}

#[test]
fn minimal_level_one_is_antipodal() {
    let o = fkqc(&["minimal", "--level", "1", "--window", "20", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 41);
    for c in v["report"]["circles"].as_array().unwrap() {
        let d = c["free_points"][0].as_f64().unwrap();
        let circ = c["circumference"].as_f64().unwrap();
        assert!((d - circ / 2.0).abs() < 1e-6);
    }
}

#[test]
fn verify_suites() {
    let o = fkqc(&["verify", "--suite", "potential"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("equivariance") && text.contains("C1"));
    let o = fkqc(&["verify", "--suite", "solver", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["failed"], 0);
    assert!(v["checks"][0]["detail"].as_str().unwrap().contains("observed ratio"));
    assert_eq!(fkqc(&["verify", "--suite", "all"]).status.code(), Some(0));
}
