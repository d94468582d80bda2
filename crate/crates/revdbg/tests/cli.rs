use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use revdbg_core::corpus::{FACTORIAL, STOCK};

fn revdbg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revdbg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_prints_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "fact.erl", FACTORIAL);
    let o = revdbg(&["run", &f, "-e", "fact(5)"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o), "120\n");
}

#[test]
fn run_fails_on_stuck_programs() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.erl", "main() -> 1 + ok.\n");
    let o = revdbg(&["run", &f]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("stuck"));
    let f = write(dir.path(), "syntax.erl", "main() -> .\n");
    assert!(!revdbg(&["run", &f]).status.success());
}

#[test]
fn trace_lint_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "stock.erl", STOCK);
    let log = dir.path().join("stock.log");
    let der = dir.path().join("stock.der");
    let (log, der) = (log.to_str().unwrap(), der.to_str().unwrap());
    for seed in ["0", "7", "31"] {
        let traced = revdbg(&["trace", &f, "--policy", "random", "--seed", seed, "-o", log, "--derivation", der]);
        assert!(traced.status.success(), "{traced:?}");
        assert!(stdout(&traced).starts_with("Stock: "));

        let o = revdbg(&["lint", log]);
        assert!(o.status.success() && stdout(&o).starts_with("ok: log of"), "{o:?}");
        let o = revdbg(&["lint", der]);
        assert!(o.status.success() && stdout(&o).contains("ok: derivation of"), "{o:?}");

        let replayed = revdbg(&["replay", &f, "-l", log]);
        assert!(replayed.status.success(), "{replayed:?}");
        assert_eq!(stdout(&replayed), stdout(&traced), "seed {seed}");
    }
    let bad = write(dir.path(), "bad.log", "{\"pid\":");
    assert!(!revdbg(&["lint", &bad]).status.success());
}

#[test]
fn scripted_debug_session() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "stock.erl", STOCK);
    let mut child = Command::new(env!("CARGO_BIN_EXE_revdbg"))
        .args(["debug", &f])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"step <0.0.0> 2\nback <0.0.0> 1\nbogus <0.9.0>\ninspect <0.0.0> 0\nundo\nquit\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("[user-driven mode, 0 steps]"), "{out}");
    assert!(out.contains("history: self seq"), "{out}");
    assert!(out.contains("error: "), "{out}");
    assert!(out.contains("\"stack_depth\""), "{out}");
}
