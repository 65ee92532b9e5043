use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;

use holex_cli::{load_system, run, Report, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, EXIT_RESOURCE};

fn brain_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/brain.json")
}

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("holex").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn loads_bundled_brain_system() {
    let s = load_system(&brain_path()).unwrap();
    assert_eq!(s.models().len(), 4);
    assert_eq!(s.links().len(), 3);
}

#[test]
fn laplace_json_report() {
    let path = brain_path();
    let (code, out, err) = run_args(&[
        "--system", path.to_str().unwrap(), "--explanandum", "AD", "--criterion", "laplace", "--format", "json",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(err.is_empty());
    let report: Report = serde_json::from_str(&out).unwrap();
    assert!(report.feasible);
    assert_eq!(report.worlds.len(), 8);
    let p = report
        .prob_of(&[("AD", true), ("BA", false), ("CA", true)].into_iter().collect())
        .unwrap();
    assert!((p - 0.07).abs() <= 0.005);
}

#[test]
fn json_report_round_trips() {
    let path = brain_path();
    for criterion in ["optimistic", "pessimistic", "laplace"] {
        let (code, out, _) = run_args(&[
            "--system", path.to_str().unwrap(), "--explanandum", "AD", "--criterion", criterion, "--format", "json",
        ]);
        assert_eq!(code, EXIT_OK);
        let report: Report = serde_json::from_str(&out).unwrap();
        let (objective, entropy, marginals) = report.recompute_summary();
        assert!((objective - report.objective).abs() <= 1e-9);
        assert!((entropy - report.entropy).abs() <= 1e-9);
        for (atom, p) in &marginals {
            assert!((p - report.marginals[atom]).abs() <= 1e-9);
        }
    }
}

#[test]
fn non_final_explanandum_is_rejected() {
    let path = brain_path();
    let (code, out, err) =
        run_args(&["--system", path.to_str().unwrap(), "--explanandum", "BA", "--criterion", "laplace"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(out.is_empty());
    assert!(err.contains("not a final output"), "{err}");
}

#[test]
fn verify_reports_oracle_agreement() {
    let path = brain_path();
    let (code, out, _) = run_args(&[
        "--system", path.to_str().unwrap(), "--explanandum", "AD", "--criterion", "optimistic", "--verify",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("objective: Pr(AD) = 0.700000"), "{out}");
    assert!(out.contains("oracle:") && out.contains("agrees"), "{out}");
}

#[test]
fn table_lists_worlds_by_descending_probability() {
    let path = brain_path();
    let (_, out, _) =
        run_args(&["--system", path.to_str().unwrap(), "--explanandum", "AD", "--criterion", "laplace"]);
    let probs: Vec<f64> = out
        .lines()
        .skip_while(|l| !l.ends_with("probability"))
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(probs.len(), 8);
    assert!(probs.windows(2).all(|w| w[0] >= w[1]));
    assert!(out.contains("marginals:"));
}

#[test]
fn unpruned_query_uses_whole_language() {
    let path = brain_path();
    let (code, out, _) = run_args(&[
        "--system", path.to_str().unwrap(), "--explanandum", "AD", "--criterion", "pessimistic",
        "--format", "json", "--no-pruning",
    ]);
    assert_eq!(code, EXIT_OK);
    let report: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(report.atoms.len(), 4);
    assert!((report.objective - 0.42).abs() < 1e-9);
}

#[test]
fn atom_cap_is_a_resource_error() {
    let path = brain_path();
    let (code, _, err) = run_args(&[
        "--system", path.to_str().unwrap(), "--explanandum", "AD", "--criterion", "laplace", "--max-atoms", "2",
    ]);
    assert_eq!(code, EXIT_RESOURCE);
    assert!(err.contains("cap"), "{err}");
}

#[test]
fn infeasible_system_reports_core() {
    let f = write_temp(
        r#"{"models": [{"id": "m", "external_inputs": ["E1", "E2"], "outputs": ["X"],
            "prob": [{"output": "X", "given": ["E1"], "theta": 0.7},
                     {"output": "X", "given": ["E2"], "theta": 0.6}]}]}"#,
    );
    let (code, out, err) = run_args(&[
        "--system", f.path().to_str().unwrap(), "--explanandum", "X", "--criterion", "laplace", "--format", "json",
    ]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert!(err.contains("rule #0") && err.contains("rule #1"), "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["feasible"], false);
    assert_eq!(v["conflicts"].as_array().unwrap().len(), 2);
}

#[test]
fn empty_model_list_is_invalid() {
    let f = write_temp(r#"{"models": []}"#);
    let (code, _, err) =
        run_args(&["--system", f.path().to_str().unwrap(), "--explanandum", "X", "--criterion", "laplace"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("no models"), "{err}");
}

#[test]
fn mismatched_links_are_named() {
    let text = std::fs::read_to_string(brain_path())
        .unwrap()
        .replace(r#"["a", "d"], "#, "");
    let f = write_temp(&text);
    let (code, _, err) =
        run_args(&["--system", f.path().to_str().unwrap(), "--explanandum", "AD", "--criterion", "laplace"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("link (a, d)"), "{err}");
}

#[test]
fn malformed_json_has_position() {
    let f = write_temp("{\n  \"models\": [\n    {\"id\": 3}\n  ]\n}");
    let (code, _, err) =
        run_args(&["--system", f.path().to_str().unwrap(), "--explanandum", "X", "--criterion", "laplace"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn cyclic_system_is_invalid() {
    let f = write_temp(
        r#"{"models": [
            {"id": "a", "internal_inputs": ["B"], "outputs": ["A"]},
            {"id": "b", "internal_inputs": ["A"], "outputs": ["B"]}],
            "links": [["a", "b"], ["b", "a"]]}"#,
    );
    let (code, _, err) =
        run_args(&["--system", f.path().to_str().unwrap(), "--explanandum", "A", "--criterion", "laplace"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("cycle"), "{err}");
}

#[test]
fn ambiguous_producer_without_links() {
    let f = write_temp(
        r#"{"models": [
            {"id": "a", "outputs": ["X"]},
            {"id": "b", "outputs": ["X"]},
            {"id": "c", "internal_inputs": ["X"], "outputs": ["Y"]}]}"#,
    );
    let (code, _, err) =
        run_args(&["--system", f.path().to_str().unwrap(), "--explanandum", "Y", "--criterion", "laplace"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("`X`"), "{err}");
}

#[test]
fn bad_flags() {
    let (code, _, _) = run_args(&["--criterion", "hurwicz"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, out, _) = run_args(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("--explanandum"));
    let path = brain_path();
    let (code, _, _) = run_args(&[
        "--system", path.to_str().unwrap(), "--explanandum", "AD", "--criterion", "laplace", "--tol", "-1",
    ]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_holex");
    let path = brain_path();
    let ok = Command::new(bin)
        .args(["--system", path.to_str().unwrap(), "--explanandum", "HR", "--criterion", "optimistic"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("Pr(HR)"));
    let bad = Command::new(bin)
        .args(["--system", path.to_str().unwrap(), "--explanandum", "CA", "--criterion", "optimistic"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(bad.stdout.is_empty());
}
