use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn arbiter(args: &[&str], registry: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbiter")).args(args).env("ARBITER_REGISTRY", registry).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn compile_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("salary.grg");
    let policy = fixture("salary.sbp");
    let o = arbiter(&["compile", policy.to_str().unwrap(), "--mode", "advanced", "-o", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let compiled = arbiter_core::rule_lang::parse_theory(&std::fs::read_to_string(out).unwrap()).unwrap();
    let expected =
        arbiter_core::rule_lang::parse_theory(&std::fs::read_to_string(fixture("salary_advanced.grg")).unwrap()).unwrap();
    assert_eq!(compiled.rules(), expected.rules());
}

#[test]
fn check_reports_errors_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.grg");
    std::fs::write(&bad, "rule(r1,a,[]) :- x <= 3.\n").unwrap();
    let o = arbiter(&["check", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.grg:1:") && err.contains("error[ParseError]"), "{err}");

    let o = arbiter(&["check", fixture("salary_basic.grg").to_str().unwrap(), "--json"], dir.path());
    assert!(o.status.success());
    let diags: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(diags.as_array().unwrap().iter().all(|d| d["severity"] != "error"));
}

#[test]
fn register_then_query_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("reg");
    let o = arbiter(&["register", "salary", fixture("salary_advanced.grg").to_str().unwrap()], &reg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("registered salary revision 1"));

    let binds = ["--bind", "offered_salary=70000", "--bind", "expected_salary=80000", "--bind", "yearly_salary_increase=0.5"];
    let mut args = vec!["query", "salary"];
    args.extend(binds);
    let o = arbiter(&args, &reg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("accept — because r4 ["), "{}", stdout(&o));
    assert!(stdout(&o).contains("overrides r3 (refuse) because p2 because c1"));

    args.push("--json");
    let o = arbiter(&args, &reg);
    let body: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(body["acceptable_options"], serde_json::json!(["accept"]));

    let o = arbiter(&["query", reg.join("salary").to_str().unwrap(), "--bind", "offered_salary=90000", "--bind", "expected_salary=80000"], &reg);
    assert!(stdout(&o).starts_with("accept — because r1"), "{}", stdout(&o));

    let o = arbiter(&["query", "salary", "--fact", "bogus"], &reg);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UnknownScenarioElement"));

    let o = arbiter(&["query", "missing"], &reg);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn query_a_source_file_with_abduction() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("budget.grg");
    std::fs::write(
        &file,
        "rule(r1,accept,[budget_frozen]).\nrule(r2,refuse,[]).\nrule(p1,prefer(r1,r2),[]).\n\
         complement(accept,refuse).\nabducible(budget_frozen).\n",
    )
    .unwrap();
    let o = arbiter(&["query", file.to_str().unwrap(), "--abduce", "accept"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("refuse — because r2"), "{out}");
    assert!(out.contains("abduced: accept — because r1") && out.contains("assuming budget_frozen"), "{out}");
}
