use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use prframes::cli::family_file::{parse_family, write_family};
use prframes::cli::{run_from, EXIT_FAIL, EXIT_INPUT, EXIT_PASS, EXIT_UNKNOWN};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("prframes").chain(args.iter().copied());
    let code = run_from(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_of(out: &str) -> Value {
    serde_json::from_str(out).unwrap_or_else(|e| panic!("{e}: {out}"))
}

const STANDARD_BASIS: &str =
    r#"{"ambient": 3, "kind": "vectors", "entries": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]}"#;

const THREE_HYPERPLANES: &str = r#"{"ambient": 3, "kind": "subspaces", "entries": [
    [["0", "1", "0"], ["0", "0", "1"]],
    [["1", "0", "0"], ["0", "0", "1"]],
    [["1", "-1", "0"], ["1", "0", "-1"]]
]}"#;

const FIVE_LINES: &str = r#"{"ambient": 3, "kind": "subspaces", "entries": [
    [["1", "-2", "4"]], [["1", "-1", "1"]], [["1", "0", "0"]], [["1", "1", "1"]], [["1", "2", "4"]]
]}"#;

/// Re-verifies the report at `report` and returns the exit code.
fn verify(dir: &TempDir, family: &Path, report: &str) -> (i32, String) {
    let cert = write(dir, "report.json", report);
    let (code, out, err) = run(&["check", s(family), "--verify-certificate", s(&cert)]);
    (code, format!("{out}{err}"))
}

#[test]
fn standard_basis_fails_with_first_index() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "basis.json", STANDARD_BASIS);
    let (code, out, _) = run(&["check", s(&f), "--json"]);
    assert_eq!(code, EXIT_FAIL);
    let r = json_of(&out);
    assert_eq!(r["verdict"], "fails");
    assert_eq!(r["certificate"]["subset"], serde_json::json!([1]));
    let x = &r["certificate"]["x"];
    let y = &r["certificate"]["y"];
    assert_eq!(x[0], "1");
    assert_eq!(y[0], "1");
    assert_eq!(verify(&dir, &f, &out).0, EXIT_PASS);
}

#[test]
fn three_hyperplanes_fail_with_witness() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "planes.json", THREE_HYPERPLANES);
    for tier in ["falsify", "sample", "certify"] {
        let (code, out, _) = run(&["check", s(&f), "--tier", tier, "--json", "--points", "200"]);
        assert_eq!(code, EXIT_FAIL, "{tier}");
        let r = json_of(&out);
        assert_eq!(r["certificate"]["type"], "span_deficiency");
        assert_eq!(verify(&dir, &f, &out).0, EXIT_PASS);
    }
}

#[test]
fn five_lines_certify_and_the_cover_replays() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lines.json", FIVE_LINES);
    let cover = dir.path().join("lines.cover");
    let (code, out, _) = run(&["check", s(&f), "--tier", "certify", "--json", "--cover-out", s(&cover)]);
    assert_eq!(code, EXIT_PASS);
    let r = json_of(&out);
    assert_eq!(r["verdict"], "certified_passes");
    assert_eq!(r["certificate"]["type"], "cover");
    assert_eq!(verify(&dir, &f, &out).0, EXIT_PASS);

    let (code, out, _) = run(&["replay", s(&f), s(&cover)]);
    assert_eq!(code, EXIT_PASS, "{out}");
    let (code, _, _) = run(&["check", s(&f), "--verify-certificate", s(&cover)]);
    assert_eq!(code, EXIT_PASS);

    // The cover does not prove anything about a different family.
    let other = write(&dir, "planes.json", THREE_HYPERPLANES);
    let (code, out, _) = run(&["replay", s(&other), s(&cover)]);
    assert_eq!(code, EXIT_FAIL, "{out}");
}

#[test]
fn tampered_witness_is_rejected() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "planes.json", THREE_HYPERPLANES);
    let (_, out, _) = run(&["check", s(&f), "--tier", "falsify", "--json", "--points", "50"]);
    let mut r = json_of(&out);
    r["certificate"]["x"] = serde_json::json!(["1", "2", "5"]);
    let (code, msg) = verify(&dir, &f, &r.to_string());
    assert_eq!(code, EXIT_FAIL, "{msg}");
    assert!(msg.contains("rejected"));
}

#[test]
fn sample_margin_is_reproduced() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lines.json", FIVE_LINES);
    let (code, out, _) = run(&["check", s(&f), "--json", "--seed", "4", "--points", "300"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(json_of(&out)["verdict"], "probably_passes");
    let (code, msg) = verify(&dir, &f, &out);
    assert_eq!(code, EXIT_PASS);
    assert!(msg.starts_with("reproduced"), "{msg}");
}

#[test]
fn reports_are_byte_identical_without_timings() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lines.json", FIVE_LINES);
    let args = ["check", s(&f), "--json", "--no-timings", "--seed", "9", "--points", "300"];
    let (_, a, _) = run(&args);
    let (_, b, _) = run(&args);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    let (_, c, _) = run(&threaded);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(!a.contains("timings_ms"));
    assert!(json_of(&a)["tool"] == "prframes");
}

#[test]
fn generated_vandermonde_passes() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("v.json");
    let (code, _, _) = run(&["generate", "--construction", "vandermonde", "-n", "3", "-m", "5", "-o", s(&p)]);
    assert_eq!(code, EXIT_PASS);
    let (code, out, _) = run(&["check", s(&p)]);
    assert_eq!(code, EXIT_PASS, "{out}");
}

#[test]
fn generated_files_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("r.json");
    let (code, _, _) =
        run(&["generate", "--construction", "random", "-n", "4", "--dims", "1,2,3,2", "--seed", "5", "-o", s(&p)]);
    assert_eq!(code, EXIT_PASS);
    let text = std::fs::read_to_string(&p).unwrap();
    let f = parse_family(&text).unwrap();
    assert_eq!(write_family(&f), text);
    let (_, again, _) = run(&["generate", "--construction", "random", "-n", "4", "--dims", "1,2,3,2", "--seed", "5"]);
    assert_eq!(again, text);
}

#[test]
fn random_hyperplanes_in_r4_are_generated() {
    let (code, out, _) = run(&["generate", "--construction", "random", "-n", "4", "--dims", "3,3,3,3,3,3"]);
    assert_eq!(code, EXIT_PASS);
    let f = parse_family(&out).unwrap();
    let prframes::cli::family_file::Family::Subspaces(f) = f else { panic!() };
    assert!(f.is_all_hyperplanes() && f.len() == 6);
}

#[test]
fn dims_containing_n_are_an_input_error() {
    let (code, _, err) = run(&["generate", "--construction", "random", "-n", "3", "--dims", "1,3,1"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn parse_errors_are_input_errors_with_locations() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.json", r#"{"ambient": 2, "kind": "vectors", "entries": [["1", "0"], ["1/0", "2"]]}"#);
    let (code, _, err) = run(&["check", s(&f)]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("entries[1][0]"), "{err}");
    let f = write(&dir, "broken.json", "{\n  \"ambient\": 2,\n  \"kind\" \"vectors\"\n}");
    let (code, _, err) = run(&["check", s(&f)]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("line 3"), "{err}");
    let (code, _, _) = run(&["check", "/nonexistent/family.json"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = run(&["check"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn augment_to_hyperplanes() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lines.json", FIVE_LINES);
    let out_path = dir.path().join("planes.json");
    let (code, out, err) =
        run(&["augment", s(&f), "--target-dims", "2,2,2,2,2", "--seed", "1", "-o", s(&out_path), "--json"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let r = json_of(&out);
    assert_eq!(r["output_dims"], serde_json::json!([2, 2, 2, 2, 2]));
    let (code, out, _) = run(&["check", s(&out_path), "--json", "--points", "300"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(json_of(&out)["verdict"], "probably_passes");
}

#[test]
fn augmenting_a_hyperplane_has_no_room() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "planes.json", THREE_HYPERPLANES);
    let (code, _, err) = run(&["augment", s(&f), "--index", "2"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("subspace 2") && err.contains("at least 2"), "{err}");

    // A passing family whose second subspace is a plane in R^3.
    let f = write(
        &dir,
        "mixed.json",
        r#"{"ambient": 3, "kind": "subspaces", "entries": [
            [["1", "-2", "4"]], [["1", "-1", "1"], ["0", "0", "1"]], [["1", "0", "0"]], [["1", "1", "1"]], [["1", "2", "4"]]
        ]}"#,
    );
    let (code, _, err) = run(&["augment", s(&f), "--index", "2"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("subspace 2"), "{err}");
    let (code, _, _) = run(&["augment", s(&f), "--index", "1"]);
    assert_eq!(code, EXIT_PASS);
}

#[test]
fn search_writes_a_resumable_checkpoint() {
    let dir = TempDir::new().unwrap();
    let cp = dir.path().join("search.json");
    let (code, out, err) = run(&[
        "search",
        "-n",
        "4",
        "-m",
        "6",
        "--dims",
        "2,2,2,2,2,2",
        "--iters",
        "5000",
        "--stop-at",
        "1e-3",
        "--every",
        "500",
        "--checkpoint",
        s(&cp),
        "--json",
    ]);
    assert_eq!(code, EXIT_PASS, "{out}{err}");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&cp).unwrap()).unwrap();
    assert_eq!(doc["format"], "prframes-search-checkpoint");
    assert!(doc["margin"]["value"].as_f64().unwrap() > 0.0);
    assert!(doc["hypothesis"].is_string());
    assert!(doc["trajectory"].as_array().is_some_and(|t| !t.is_empty()));
    let (code, out, _) = run(&[
        "search",
        "-n",
        "4",
        "-m",
        "6",
        "--dims",
        "2",
        "--iters",
        "100",
        "--checkpoint",
        s(&cp),
        "--resume",
        "--json",
    ]);
    assert_eq!(code, EXIT_PASS);
    assert!(json_of(&out)["iteration"].as_u64().unwrap() >= doc["iteration"].as_u64().unwrap());
}

#[test]
fn search_rejects_too_few_hyperplanes() {
    let (code, _, err) = run(&["search", "-n", "4", "-m", "5", "--dims", "3", "--iters", "10"]);
    assert_eq!(code, EXIT_INPUT, "{err}");
}

#[test]
fn unknown_verdicts_exit_two() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "lines.json", FIVE_LINES);
    let (code, out, _) = run(&["check", s(&f), "--tier", "falsify", "--json", "--points", "100"]);
    assert_eq!(code, EXIT_UNKNOWN);
    assert_eq!(verify(&dir, &f, &out).0, EXIT_UNKNOWN);
}
