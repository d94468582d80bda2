use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};
use std::sync::mpsc;

use revdbg::{serve_tcp, Call, Reply, Service, SCHEMA_VERSION};
use revdbg_core::corpus::STOCK;
use serde_json::{json, Value};

fn open(service: &Service) -> Value {
    let line = json!({"id": 1, "cmd": "open", "source": STOCK, "entry": "main"}).to_string();
    serde_json::to_value(service.handle_line(&line)).unwrap()
}

fn call(service: &Service, v: Value) -> Value {
    serde_json::to_value(service.handle_line(&v.to_string())).unwrap()
}

#[test]
fn initial_stock_view_matches_golden_file() {
    let line = json!({"id": 1, "cmd": "open", "source": STOCK, "entry": "main"}).to_string();
    let Reply::View(view) = Service::new().handle_line(&line).reply else {
        panic!("no view")
    };
    let text = serde_json::to_string_pretty(&view).unwrap() + "\n";
    assert_eq!(text, include_str!("golden/fig1_initial_view.json"));
}

#[test]
fn hello_reports_the_schema() {
    let s = Service::new();
    let r = call(&s, json!({"id": "a", "cmd": "hello"}));
    assert_eq!(r["id"], "a");
    assert_eq!(r["hello"]["schema"], SCHEMA_VERSION);
    assert_eq!(s.call(Call::Hello).clone(), Reply::Hello(revdbg::Hello::current()));
}

#[test]
fn errors_carry_the_request_id() {
    let s = Service::new();
    let r = call(&s, json!({"id": 7, "cmd": "snapshot", "session": 99}));
    assert_eq!(r["id"], 7);
    assert_eq!(r["error"]["kind"], "unknown-session");
    let r = call(&s, json!({"id": 8, "cmd": "launch"}));
    assert_eq!(r["error"]["kind"], "bad-request");
    let r = serde_json::to_value(s.handle_line("{oops")).unwrap();
    assert_eq!(r["id"], Value::Null);
    assert_eq!(r["error"]["kind"], "bad-request");
    let r = call(&s, json!({"id": 9, "cmd": "open", "source": "main( ->", "entry": "main"}));
    assert_eq!(r["error"]["kind"], "parse");
    open(&s);
    let r = call(&s, json!({"id": 10, "cmd": "apply", "session": 1, "line": "step <0.4.0> 1"}));
    assert_eq!(r["error"]["kind"], "infeasible");
    let r = call(&s, json!({"id": 11, "cmd": "apply", "session": 1, "line": "roll-var <0.0.0> x"}));
    assert_eq!(r["error"]["kind"], "request");
    let r = call(&s, json!({"id": 12, "cmd": "open", "source": STOCK, "entry": "main", "policy": "fifo"}));
    assert_eq!(r["error"]["kind"], "usage");
}

#[test]
fn sessions_are_independent() {
    let s = Service::new();
    open(&s);
    let second = open(&s);
    assert_eq!(second["view"]["session"], 2);
    call(&s, json!({"id": 2, "cmd": "apply", "session": 1, "line": "step <0.0.0> 3"}));
    let a = call(&s, json!({"id": 3, "cmd": "snapshot", "session": 1}));
    let b = call(&s, json!({"id": 4, "cmd": "snapshot", "session": 2}));
    assert_eq!(a["view"]["trace_len"], 3);
    assert_eq!(b["view"]["trace_len"], 0);
    let d = call(&s, json!({"id": 5, "cmd": "inspect", "session": 1, "pid": "<0.0.0>", "index": 2}));
    assert_eq!(d["detail"]["expr"], "main:main()");
    let c = call(&s, json!({"id": 6, "cmd": "close", "session": 1}));
    assert_eq!(c["closed"], 1);
    let gone = call(&s, json!({"id": 7, "cmd": "snapshot", "session": 1}));
    assert_eq!(gone["error"]["kind"], "unknown-session");
}

fn greet(lines: &mut impl BufRead) {
    let mut hello = String::new();
    lines.read_line(&mut hello).unwrap();
    let hello: Value = serde_json::from_str(&hello).unwrap();
    assert_eq!(hello["hello"]["schema"], SCHEMA_VERSION);
}

/// Send the requests one at a time and collect the replies.
fn drive(lines: &mut impl BufRead, out: &mut impl Write, reqs: &[Value]) -> Vec<Value> {
    reqs.iter()
        .map(|r| {
            writeln!(out, "{r}").unwrap();
            out.flush().unwrap();
            let mut line = String::new();
            lines.read_line(&mut line).unwrap();
            serde_json::from_str(&line).unwrap()
        })
        .collect()
}

fn scripted(lines: &mut impl BufRead, out: &mut impl Write) {
    greet(lines);
    let open = json!({"id": 1, "cmd": "open", "source": STOCK, "entry": "main", "policy": "random", "seed": 11});
    let r = drive(
        lines,
        out,
        &[
            open,
            json!({"id": 2, "cmd": "apply", "session": 1, "line": "trace"}),
            json!({"id": 3, "cmd": "apply", "session": 1, "line": "replay"}),
        ],
    );
    let view = &r[2]["view"];
    assert_eq!(view["outcome"], "done");
    let c1 = &view["processes"][1];
    let first_send = c1["history"].as_array().unwrap().iter().rev().find(|h| h["kind"] == "send").unwrap();
    let roll = first_send["roll_command"].as_str().unwrap().to_string();
    assert_eq!(roll, format!("roll-send <0.1.0> {}", first_send["id"]));
    let r = drive(
        lines,
        out,
        &[
            json!({"id": 4, "cmd": "apply", "session": 1, "line": roll}),
            json!({"id": 5, "cmd": "apply", "session": 1, "line": "step <0.1.0> 1"}),
        ],
    );
    assert_eq!(r[0]["view"]["outcome"], "done");
    assert_eq!(r[1]["id"], 5);
    assert_eq!(r[1]["view"]["outcome"], "done");
}

#[test]
fn scripted_session_over_stdio() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_revdbg"))
        .args(["serve", "--stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    scripted(&mut stdout, &mut stdin);
    drop(stdin);
    assert!(child.wait().unwrap().success());
}

#[test]
fn scripted_session_over_tcp() {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || serve_tcp("127.0.0.1:0", |a| tx.send(a).unwrap()));
    let addr = rx.recv().unwrap();
    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    scripted(&mut reader, &mut writer);
}
