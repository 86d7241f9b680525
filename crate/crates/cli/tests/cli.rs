use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
}

fn copyless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copyless")).args(args).current_dir(root()).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn check_accepts_endpoint_transfer() {
    let out = copyless(&["check", "corpus/example_2_2.cmp"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("verified"));
}

#[test]
fn check_rejects_the_invalid_two_producer_proof_at_the_send() {
    let out = copyless(&["check", "corpus/invalid_sec3.cmp", "--json"]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let put = v["check"]["functions"].as_array().unwrap().iter().find(|f| f["name"] == "put").unwrap();
    assert_eq!(put["verdict"]["reason"], "PermissionViolation");
    let line = put["verdict"]["site"]["line"].as_u64().unwrap() as usize;
    let text = std::fs::read_to_string(root().join("corpus/invalid_sec3.cmp")).unwrap();
    assert!(text.lines().nth(line - 1).unwrap().trim_start().starts_with("send("));
}

#[test]
fn missing_file_and_bad_usage_exit_3() {
    assert_eq!(code(&copyless(&["check", "nonexistent.cmp"])), 3);
    assert_eq!(code(&copyless(&["run", "corpus/p0.cmp"])), 3, "seed is required");
    assert_eq!(code(&copyless(&["explore", "corpus/p0.cmp", "--loop-bound", "0"])), 3);
    assert_eq!(code(&copyless(&["frobnicate"])), 3);
}

#[test]
fn parse_errors_exit_3_with_a_location() {
    let dir = std::env::temp_dir().join(format!("copyless-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.cmp");
    std::fs::write(&bad, "main() [emp] {\n  x = ;\n} [emp]\n").unwrap();
    let out = copyless(&["check", bad.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 3);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["error"]["line"], 2);
}

#[test]
fn explore_p0_reports_both_outcomes() {
    let out = copyless(&["explore", "corpus/p0.cmp"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).starts_with("outcomes: {Deadlock, UnspecifiedReception}\n"), "{}", stdout(&out));
}

#[test]
fn run_with_seed_finishes_clean_and_is_reproducible() {
    let a = copyless(&["run", "corpus/example_1_1.cmp", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert!(stdout(&a).ends_with("outcome: FinishedClean\n"));
    for line in stdout(&a).lines().filter(|l| !l.starts_with("outcome")) {
        let (tid, rest) = line.split_once(": ").unwrap();
        assert!(tid.parse::<u32>().is_ok() && rest.contains(" @ "), "{line}");
    }
    let b = copyless(&["run", "corpus/example_1_1.cmp", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn leaks_are_runtime_errors() {
    assert_eq!(code(&copyless(&["run", "corpus/leaky_1_1.cmp", "--seed", "1"])), 2);
}

#[test]
fn lint_contracts_only() {
    let out = copyless(&["lint", "corpus/contracts_only.cmp"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn strict_contracts_turns_lint_warnings_into_failures() {
    assert_eq!(code(&copyless(&["lint", "corpus/lock.cmp"])), 0);
    assert_eq!(code(&copyless(&["lint", "corpus/lock.cmp", "--strict-contracts"])), 1);
}

#[test]
fn json_output_validates_against_the_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root().join("docs/report.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let mut files: Vec<String> = std::fs::read_dir(root().join("corpus"))
        .unwrap()
        .map(|e| format!("corpus/{}", e.unwrap().file_name().to_string_lossy()))
        .filter(|p| p.ends_with(".cmp"))
        .collect();
    files.sort();
    files.push("nonexistent.cmp".into());
    for file in &files {
        for args in [
            vec!["check", file],
            vec!["lint", file],
            vec!["run", file, "--seed", "3"],
            vec!["explore", file, "--max-states", "20000"],
        ] {
            let mut args = args;
            args.push("--json");
            let out = copyless(&args);
            let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap_or_else(|e| panic!("{args:?}: {e}"));
            let errors: Vec<String> = validator.iter_errors(&v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
            assert!(errors.is_empty(), "{args:?}:\n{}", errors.join("\n"));
            assert_eq!(v["exit_code"].as_i64(), Some(code(&out) as i64), "{args:?}");
        }
    }
}
