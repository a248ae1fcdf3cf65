use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cypher-equiv"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn empty_file_reports_zero_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.pairs");
    fs::write(&f, "").unwrap();
    let o = bin().arg("check").arg(&f).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 pairs"), "{}", stdout(&o));
}

#[test]
fn positive_suite_is_all_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("records.jsonl");
    let o = bin().arg("check").arg(data("positive.pairs")).arg("--records").arg(&rec).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = fs::read_to_string(&rec).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.len() >= 40);
    for l in &lines {
        assert_eq!(l["outcome"], "Equivalent", "{l}");
        assert!(l["latencyMs"].is_u64());
    }
}

#[test]
fn refuted_pair_gets_a_witness_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("neg.pairs");
    fs::write(&f, "# id: labels\n# expect: nonequivalent\nMATCH (n) RETURN n\n--\nMATCH (n:Person) RETURN n\n")
        .unwrap();
    let w = dir.path().join("w");
    let o = bin().arg("check").arg(&f).arg("--witness-dir").arg(&w).arg("--records").arg("-").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("NotEquivalent"), "{out}");
    let g = fs::read_to_string(w.join("labels.graph")).unwrap();
    assert!(g.starts_with("node 0"), "{g}");
}

#[test]
fn contradicted_expectation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.pairs");
    fs::write(&f, "# expect: equivalent\nMATCH (n) RETURN n\n--\nMATCH (n:Person) RETURN n\n").unwrap();
    let o = bin().arg("check").arg(&f).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn malformed_pair_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.pairs");
    fs::write(&f, "MATCH (n) RETURN n\n").unwrap();
    let o = bin().arg("check").arg(&f).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn dump_smt_writes_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("one.pairs");
    fs::write(&f, "# id: split\nMATCH (n) WHERE n.age < 10 OR n.age > 20 RETURN n\n--\nMATCH (n) WHERE n.age < 10 RETURN n UNION ALL MATCH (n) WHERE n.age > 20 RETURN n\n").unwrap();
    let d = dir.path().join("smt");
    let o = bin().arg("check").arg(&f).arg("--dump-smt").arg(&d).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let script = fs::read_to_string(d.join("split.0.smt2")).unwrap();
    assert!(script.contains("(check-sat)"));
}

#[test]
fn oracle_agrees_on_identical_queries() {
    let q = "MATCH (a)-[r]->(b) RETURN a, b";
    let o = bin().args(["oracle", q, q]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("AgreesUpToBound"));
}

#[test]
fn oracle_prints_label_counterexample() {
    let o = bin()
        .args(["oracle", "MATCH (n) RETURN n", "MATCH (n:Person) RETURN n", "--oracle-bound", "2,1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(out.starts_with("Counterexample\nnode 0"), "{out}");
}

#[test]
fn mutate_is_deterministic_and_verified() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.pairs");
    let text = fs::read_to_string(data("positive.pairs")).unwrap();
    let head: Vec<&str> = text.split("\n----\n").take(6).collect();
    fs::write(&src, head.join("\n----\n")).unwrap();
    let run = |out: &Path| {
        let o = bin().arg("mutate").arg(&src).arg("--seed").arg("7").arg("-o").arg(out).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        fs::read_to_string(out).unwrap()
    };
    let a = run(&dir.path().join("a.pairs"));
    let b = run(&dir.path().join("b.pairs"));
    assert_eq!(a, b);
    assert!(a.contains("# expect: nonequivalent"));
    assert!(a.contains("# witness: node"));
    let o = bin().arg("check").arg(dir.path().join("a.pairs")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains(" Equivalent "));
}
