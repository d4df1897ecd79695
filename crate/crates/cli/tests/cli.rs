use std::path::Path;
use std::process::{Command, Output};

use viewdisc::fixtures::write_employee_corpus;

fn viewdisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewdisc"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Setup {
    _dirs: Vec<tempfile::TempDir>,
    index: String,
    qv: String,
    work: std::path::PathBuf,
}

fn setup() -> Setup {
    let corpus = tempfile::tempdir().unwrap();
    write_employee_corpus(corpus.path()).unwrap();
    let work = tempfile::tempdir().unwrap();
    let index = work.path().join("idx");
    let o = viewdisc(&["index", p(corpus.path()), "--out", p(&index)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("indexed 5 tables"));
    let qv = work.path().join("qv.yaml");
    std::fs::write(&qv, "attributes: [employee, address]\ntuples:\n  - employee: Raul CF\n").unwrap();
    Setup {
        index: p(&index).to_string(),
        qv: p(&qv).to_string(),
        work: work.path().to_path_buf(),
        _dirs: vec![corpus, work],
    }
}

#[test]
fn missing_directories_exit_with_usage_status() {
    let o = viewdisc(&["index", "/definitely/not/here", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("usage"));
    let o = viewdisc(&["query", "qv.yaml", "--index", "/definitely/not/here"]);
    assert_eq!(o.status.code(), Some(2));
    let o = viewdisc(&["query"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reindexing_is_byte_identical() {
    let corpus = tempfile::tempdir().unwrap();
    write_employee_corpus(corpus.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    for d in [&a, &b] {
        assert!(viewdisc(&["index", p(corpus.path()), "--out", p(d)]).status.success());
    }
    for f in ["catalog.json", "values.idx"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn query_reports_four_views_and_exports() {
    let s = setup();
    let out = s.work.join("out");
    let o = viewdisc(&["query", &s.qv, "--index", &s.index, "--max-hops", "1", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("views 4"), "{text}");
    assert!(text.contains("3 views remain"), "{text}");
    for stage in ["does-join?", "does-materialize?", "materialize", "4c", "other", "total"] {
        assert!(text.contains(stage));
    }
    assert!(out.join("report.json").exists());
    assert!(out.join("actions.json").exists());
    let csvs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 3);
}

#[test]
fn interactive_choice_on_stdin() {
    use std::io::Write;
    let s = setup();
    let mut child = Command::new(env!("CARGO_BIN_EXE_viewdisc"))
        .args(["query", &s.qv, "--index", &s.index, "--max-hops", "1", "--interactive"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1\n1\n1\n1\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("keep (1/2)"));
    assert!(text.contains("1 views remain"), "{text}");
}

#[test]
fn multi_row_gives_one_view() {
    let s = setup();
    let o = viewdisc(&["query", &s.qv, "--index", &s.index, "--max-hops", "1", "--strategy", "multi-row"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("multi-row view").count(), 1, "{text}");
}

#[test]
fn dry_run_prints_funnel_counts() {
    let s = setup();
    let o = viewdisc(&["query", &s.qv, "--index", &s.index, "--dry-run"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for k in ["CG ", "P ", "JG ", "MG 0"] {
        assert!(text.contains(k), "{k} missing in {text}");
    }
}

#[test]
fn bad_query_view_exits_two() {
    let s = setup();
    let bad = s.work.join("bad.yaml");
    std::fs::write(&bad, "attributes: [employee]\ntuples:\n  - salary: 10\n").unwrap();
    let o = viewdisc(&["query", p(&bad), "--index", &s.index]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tuples[0].salary"));
    let o = viewdisc(&["query", &s.qv, "--index", &s.index, "--strategy", "all"]);
    assert_eq!(o.status.code(), Some(2));
    let o = viewdisc(&["query", &s.qv, "--index", &s.index, "--max-hops", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn no_candidate_views_is_not_an_error() {
    let s = setup();
    let qv = s.work.join("none.yaml");
    std::fs::write(&qv, "attributes: [salary]\n").unwrap();
    let o = viewdisc(&["query", p(&qv), "--index", &s.index]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no candidate views"));
}

#[test]
fn sampled_query_then_full_materialization() {
    let s = setup();
    let o = viewdisc(&["query", &s.qv, "--index", &s.index, "--max-hops", "1", "--sample", "2", "--out", p(&s.work.join("s"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(s.work.join("s/report.json")).unwrap()).unwrap();
    assert_eq!(report["counts"]["views"], 4);
    let prov = std::fs::read_dir(s.work.join("s"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with(".provenance.json"))
        .unwrap();
    let view_id = prov.file_name().unwrap().to_str().unwrap().split('.').next().unwrap().to_string();
    let full = s.work.join("full");
    let o = viewdisc(&["materialize", &s.qv, "--index", &s.index, "--max-hops", "1", "--full", &view_id, "--out", p(&full)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(full.join(format!("{view_id}.csv")).exists());
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(full.join(format!("{view_id}.provenance.json"))).unwrap()).unwrap();
    assert_eq!(side["sampled"], false);
}
