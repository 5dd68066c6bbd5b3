use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsda-analyzer")).args(args).output().expect("runs")
}

fn scratch(name: &str, text: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qsda-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_corpus_program_exits_zero() {
    let out = bin(&["check", "sorted-insert"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("proved"));
    assert!(!text.contains("unknown"));
}

#[test]
fn check_json_report() {
    let out = bin(&["check", "init", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["program"], "init");
    assert_eq!(v["y"], 1);
}

#[test]
fn unproved_assertion_exits_one() {
    let p = scratch(
        "partial.hp",
        "pointer head, cur;\ndata key;\n@universals 1\n@pre List(head)\n@assert exit Init(head, key)\n\
         1: cur := head;\n2: if (cur != nil) then\n3:   cur->data := key;\n   fi\n",
    );
    let out = bin(&["check", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_input_exits_two() {
    let p = scratch("bad.hp", "pointer head;\n1: head := ;\n");
    assert_eq!(bin(&["check", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["check", "no-such-program"]).status.code(), Some(2));
    assert_eq!(bin(&["oracle", "init", "--data-range", "3..1"]).status.code(), Some(2));
}

#[test]
fn oracle_finds_no_violation() {
    let out = bin(&["oracle", "add-tail", "--max-nodes", "3", "--data-range", "0..2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains(" 0 violations"));
}

#[test]
fn emit_prints_a_formula() {
    let out = bin(&["emit", "init"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stdout.is_empty());
}

#[test]
fn bench_required_corpus() {
    let out = bin(&["bench", "--required-only"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("Program"));
    assert!(text.contains("gslist-insert-sorted"));
    assert!(!text.contains("bubble-sort"));
}
