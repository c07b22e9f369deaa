use std::path::PathBuf;
use std::process::{Command, Output};

use svar_ident::{ColumnStatus, Verdict};
use svar_ident_cli::{parse_matrix, run, CheckJson, ExplainJson, RotateJson};

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
        .display()
        .to_string()
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svar-ident"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_exit_codes() {
    let cx = example("counterexample.spec");
    let rec = example("recursive3.spec");
    assert_eq!(bin(&["check", &rec]).status.code(), Some(0));
    assert_eq!(bin(&["check", &cx]).status.code(), Some(2));
    assert_eq!(
        bin(&["check", "--spec", &cx, "--draws", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(bin(&["check", "/no/such/file.spec"]).status.code(), Some(1));
    assert_eq!(bin(&["check", &rec, "--draws", "1"]).status.code(), Some(1));
    assert_eq!(bin(&["check", &rec, "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(bin(&["check"]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    assert_eq!(bin(&["--version"]).status.code(), Some(0));
}

#[test]
fn count_failure_exits_two_without_draws() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("free.spec");
    std::fs::write(&path, "n = 3\nblock A0\n x x x\n 0 x x\n x x x\n").unwrap();
    let o = bin(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("count condition (q_j = n - j): FAIL"));
    assert!(text.contains("verdict: NotIdentified_CountFailure"));
    assert!(!text.contains("draw 0"));

    let o = bin(&["explain", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("svar-ident check"));
}

#[test]
fn spec_errors_report_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.spec");
    std::fs::write(&path, "n = 2\nblock A0\n x q\n x x\n").unwrap();
    let o = bin(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn check_json_round_trips() {
    let cx = example("counterexample.spec");
    let o = bin(&["check", &cx, "--format", "json", "--seed", "17"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let parsed: CheckJson = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.command, "check");
    assert_eq!(parsed.report.verdict, Verdict::NotIdentifiedRedundancy);
    assert_eq!(parsed.report.q, vec![2, 1, 0]);
    assert_eq!(parsed.report.draws.len(), 5);
    assert!(parsed.report.draws.iter().all(|d| d.seed == 17));
    assert_eq!(
        parsed.report.draws[0].columns[1].status,
        ColumnStatus::Redundant(2)
    );
    assert_eq!(
        parsed.report.rank_check.as_ref().unwrap().ranks,
        vec![3, 2, 3]
    );

    // re-serializing reproduces the document, so floats survive bit for bit
    let again = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
    assert_eq!(again, text);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in [
        "command",
        "spec",
        "n",
        "p",
        "q",
        "count_condition",
        "total_restrictions",
        "required",
        "draws",
        "rank_check",
        "verdict",
    ] {
        assert!(value.get(key).is_some(), "missing {key}");
    }
    assert_eq!(value["verdict"], "NotIdentified_Redundancy");
    assert_eq!(value["draws"][0]["columns"][1]["status"], "Redundant(2)");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let cx = example("counterexample.spec");
    for args in [
        vec!["check", cx.as_str()],
        vec!["check", cx.as_str(), "--format", "json"],
        vec!["rotate", cx.as_str(), "--seed", "4"],
        vec!["explain", cx.as_str(), "--format", "json"],
        vec!["demo"],
    ] {
        let a = bin(&args);
        let b = bin(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stderr, b.stderr, "{args:?}");
    }
}

#[test]
fn demo_walks_through_the_counterexample() {
    let o = bin(&["demo"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for needle in [
        "q = (2, 1, 0), counting rule q_j = n - j: pass",
        "p1 = (1, 0, 0)",
        "rank(Q~1 f) = 2",
        "rank(Q~2 f) = 1 < required 2",
        "rank(M1) = 3",
        "rank(M2) = 2",
        "verdict: NotIdentified_Redundancy",
    ] {
        assert!(text.contains(needle), "missing `{needle}` in\n{text}");
    }
}

#[test]
fn explain_names_the_implied_zero() {
    let cx = example("counterexample.spec");
    let o = bin(&["explain", &cx]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("IR0(1,2) is implied by other restrictions: A0(2,1), A0(3,1)"));

    let o = bin(&["explain", &cx, "--format", "json"]);
    let parsed: ExplainJson = serde_json::from_str(&stdout(&o)).unwrap();
    let ex = parsed.explanation.unwrap();
    assert_eq!((ex.j, ex.rank, ex.required), (2, 1, 2));
    assert_eq!(ex.implied.len(), 1);
    assert_eq!(ex.implied[0].cell.unwrap().to_string(), "IR0(1,2)");

    let o = bin(&["explain", &example("recursive3.spec")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nothing to explain"));
}

#[test]
fn rotate_at_identity_covariance_returns_identity() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("sigma.txt");
    std::fs::write(&sigma, "# identity\n1 0 0\n0 1 0\n0 0 1\n").unwrap();
    let rec = example("recursive3.spec");
    let o = bin(&[
        "rotate",
        &rec,
        "--sigma",
        sigma.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let parsed: RotateJson = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(parsed.unique);
    assert_eq!(parsed.source, "file");
    for (i, row) in parsed.p.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((x - want).abs() <= 1e-12, "P[{i}][{j}] = {x}");
        }
    }
    assert!(parsed.residual <= 1e-15);
    assert_eq!(parsed.aplus.len(), 4);

    let o = bin(&["rotate", &rec, "--sigma", sigma.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("unique: yes"));
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("restriction residual: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-15);
    assert!(stderr(&o).is_empty());
}

#[test]
fn rotate_warns_loudly_when_not_unique() {
    let o = bin(&["rotate", &example("counterexample.spec")]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    assert!(err.contains("WARNING: rotation is NOT unique"));
    assert!(err.contains("null space has dimension 2"));
    assert!(stdout(&o).contains("unique: NO"));
}

#[test]
fn rotate_rejects_bad_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = dir.path().join("sigma.txt");
    std::fs::write(&sigma, "1 0 0\n0 1\n0 0 1\n").unwrap();
    let o = bin(&[
        "rotate",
        &example("recursive3.spec"),
        "--sigma",
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));

    std::fs::write(&sigma, "1 2 0\n2 1 0\n0 0 1\n").unwrap();
    let o = bin(&[
        "rotate",
        &example("recursive3.spec"),
        "--sigma",
        sigma.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("positive definite"));
}

#[test]
fn matrix_parser_handles_comments_and_errors() {
    let m = parse_matrix("# header\n 1 2 # trailing\n\n3 4e-1\n").unwrap();
    assert_eq!(m.shape(), (2, 2));
    assert_eq!(m[(1, 1)], 0.4);
    assert_eq!(parse_matrix("1 x").unwrap_err().0, 1);
    assert!(parse_matrix("# nothing").is_err());
}

#[test]
fn run_writes_to_supplied_streams() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(["svar-ident", "demo"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().contains("verdict:"));
    assert!(err.is_empty());
}
