use proptest::prelude::*;
use revdbg::{Command, Session, SessionError, Settings, StateView, UNDO_DEPTH};
use revdbg_core::causality::encode_log;
use revdbg_core::corpus::STOCK;
use revdbg_core::syntax::Pid;
use revdbg_core::system::{run_trace, Policy, Scheduler, StdSystem, SystemLog};

const SERVER: Pid = Pid(0);
const CUSTOMER1: Pid = Pid(1);

fn stock_log(seed: u64) -> SystemLog {
    let program = std::sync::Arc::new(revdbg_core::syntax::parse_program(STOCK).unwrap());
    let sys = StdSystem::init(program, "main").unwrap();
    run_trace(sys, &mut Scheduler::new(Policy::Random, seed), 10_000).unwrap().log()
}

fn user() -> Session {
    Session::create(1, STOCK, "main", None, Settings::default()).unwrap()
}

fn replay(seed: u64) -> Session {
    Session::create(1, STOCK, "main", Some(&encode_log(&stock_log(seed))), Settings::default()).unwrap()
}

fn json(v: &StateView) -> String {
    serde_json::to_string(v).unwrap()
}

fn mentions(v: &StateView, id: u64) -> bool {
    v.mailbox.iter().any(|m| m.id == id) || v.processes.iter().any(|p| p.history.iter().any(|h| h.id == Some(id)))
}

#[test]
fn fresh_sessions() {
    let s = user();
    let v = s.snapshot();
    assert_eq!(v.mode, "user-driven");
    assert_eq!(v.processes.len(), 1);
    assert!(v.mailbox.is_empty());
    assert!(v.processes.iter().all(|p| p.history.is_empty()));
    assert_eq!(replay(0).snapshot().mode, "replay");
    assert!(matches!(
        Session::create(1, "main() -> ", "main", None, Settings::default()),
        Err(SessionError::Parse(_))
    ));
    assert!(matches!(
        Session::create(1, STOCK, "main", Some("{\"pid\":"), Settings::default()),
        Err(SessionError::Log(_))
    ));
    assert!(matches!(Session::create(1, STOCK, "nope", None, Settings::default()), Err(SessionError::System(_))));
}

#[test]
fn back_undoes_one_step() {
    let mut s = user();
    let before = s.snapshot();
    s.apply_line("step <0.0.0> 1").unwrap();
    assert_eq!(s.snapshot().process(SERVER).unwrap().history.len(), 1);
    let v = s.apply_line("back <0.0.0> 1").unwrap();
    assert_eq!(v.outcome.as_deref(), Some("done"));
    assert_eq!(v.processes, before.processes);
    assert_eq!(v.mailbox, before.mailbox);
}

#[test]
fn roll_send_removes_every_trace_of_the_message() {
    for seed in 0..20 {
        let mut s = replay(seed);
        s.apply(&Command::Replay).unwrap();
        let v = s.snapshot();
        let c1 = v.process(CUSTOMER1).unwrap();
        let first = c1.history.iter().rev().find(|h| h.kind == "send").unwrap().id.unwrap();
        let v = s.apply_line(&format!("roll-send {CUSTOMER1} {first}")).unwrap();
        assert_eq!(v.outcome.as_deref(), Some("done"));
        assert!(!mentions(&v, first), "seed {seed}");
        assert!(v.requests.is_empty());
    }
}

#[test]
fn full_replay_prints_the_logged_stock() {
    for seed in 0..20 {
        let log = stock_log(seed);
        // the server's received labels, in order, tell which adds came before the del
        let c1_sends: Vec<u64> = log
            .events(CUSTOMER1)
            .filter_map(|e| match e {
                revdbg_core::system::LogEvent::Send(l) => Some(l.0),
                _ => None,
            })
            .collect();
        let c2_sends: Vec<u64> = log
            .events(Pid(2))
            .filter_map(|e| match e {
                revdbg_core::system::LogEvent::Send(l) => Some(l.0),
                _ => None,
            })
            .collect();
        let mut n = 0i64;
        for e in log.events(SERVER) {
            let revdbg_core::system::LogEvent::Rec(l) = e else { continue };
            if l.0 == c1_sends[1] {
                break;
            }
            n += if l.0 == c1_sends[0] {
                3
            } else {
                [5, 1, 4][c2_sends.iter().position(|&x| x == l.0).unwrap()]
            };
        }
        let mut s = Session::create(1, STOCK, "main", Some(&encode_log(&log)), Settings::default()).unwrap();
        let v = s.apply(&Command::Replay).unwrap();
        assert_eq!(v.process(CUSTOMER1).unwrap().output, format!("Stock: {}\n", n - 10));
        assert!(v.processes.iter().all(|p| p.log.is_empty()));
    }
}

#[test]
fn failing_commands_change_nothing() {
    let mut s = replay(3);
    s.apply_line("step <0.0.0> 5").unwrap();
    let before = json(&s.snapshot());
    for bad in [
        "step <0.9.0> 1",
        "back <0.7.0> 1",
        "roll-send <0.0.0> 999",
        "roll-var <0.0.0> Nope",
        "frobnicate",
        "step",
        "redo",
        "run x",
    ] {
        assert!(s.apply_line(bad).is_err(), "{bad}");
        assert_eq!(json(&s.snapshot()), before, "{bad}");
    }
}

#[test]
fn blocked_and_fuel_exhausted_clear_requests() {
    let mut s = user();
    let v = s.apply_line("replay-rec <0.0.0> 42").unwrap();
    assert!(v.outcome.as_deref().unwrap().starts_with("blocked"), "{:?}", v.outcome);
    assert!(v.requests.is_empty());
    // the steps taken before blocking are kept
    assert!(!v.process(SERVER).unwrap().history.is_empty());

    let settings = Settings {
        fuel: 1,
        ..Settings::default()
    };
    let mut s = Session::create(1, STOCK, "main", None, settings).unwrap();
    let v = s.apply_line("step <0.0.0> 3").unwrap();
    assert_eq!(v.outcome.as_deref(), Some("fuel exhausted"));
    assert!(v.requests.is_empty());
    assert_eq!(v.process(SERVER).unwrap().history.len(), 1);
}

#[test]
fn undo_and_redo_restore_whole_states() {
    let mut s = replay(1);
    let v0 = s.snapshot();
    let v1 = s.apply_line("run 7").unwrap();
    let v2 = s.apply_line("back <0.0.0> 2").unwrap();
    assert_eq!(v2.undo_depth, 2);
    let u = s.apply(&Command::Undo).unwrap();
    assert_eq!(u.processes, v1.processes);
    assert_eq!(u.redo_depth, 1);
    let u = s.apply(&Command::Undo).unwrap();
    assert_eq!(u.processes, v0.processes);
    assert!(matches!(s.apply(&Command::Undo), Err(SessionError::NothingTo("undo"))));
    let r = s.apply(&Command::Redo).unwrap();
    assert_eq!(r.processes, v1.processes);
    s.apply_line("step <0.0.0> 1").unwrap();
    assert_eq!(s.redo_depth(), 0);
    for _ in 0..UNDO_DEPTH + 10 {
        s.apply_line("run 1").unwrap();
    }
    assert_eq!(s.undo_depth(), UNDO_DEPTH);
}

#[test]
fn trace_then_replay() {
    let mut s = user();
    let v = s.apply_line("trace 4").unwrap();
    assert!(v.has_log);
    assert_eq!(v.mode, "user-driven");
    assert_eq!(v.trace_len, 0);
    let v = s.apply_line("replay").unwrap();
    assert_eq!(v.mode, "replay");
    assert_eq!(v.outcome.as_deref(), Some("done"));
    assert!(v.process(CUSTOMER1).unwrap().output.starts_with("Stock: "));
    let v = s.apply_line("restart").unwrap();
    assert_eq!(v.mode, "user-driven");
    assert!(v.has_log);
    let v = s.apply_line("restart --log").unwrap();
    assert_eq!(v.mode, "replay");
    assert!(!v.process(SERVER).unwrap().log.is_empty());
}

#[test]
fn inspect_returns_stored_configurations() {
    let mut s = user();
    s.apply_line("step <0.0.0> 2").unwrap();
    let newest = s.inspect(SERVER, 0).unwrap();
    let oldest = s.inspect(SERVER, 1).unwrap();
    assert_eq!(oldest.expr, "main:main()");
    assert_eq!(oldest.highlight.line, 1);
    assert_ne!(newest.expr, oldest.expr);
    assert!(s.inspect(SERVER, 2).is_err());
    assert!(s.inspect(Pid(5), 0).is_err());
}

#[test]
fn snapshots_are_stable() {
    let mut s = replay(2);
    s.apply_line("run 20").unwrap();
    assert_eq!(json(&s.snapshot()), json(&s.snapshot()));
}

/// Every control command offered by a view is accepted.
#[test]
fn offered_commands_apply() {
    let mut s = replay(5);
    s.apply_line("run 40").unwrap();
    let v = s.snapshot();
    let mut cmds = Vec::new();
    for p in &v.processes {
        if !p.status.starts_with("terminated") {
            cmds.push(p.step_command.clone());
        }
        cmds.extend(p.back_command.clone());
        cmds.extend(p.history.iter().filter_map(|h| h.roll_command.clone()));
        cmds.extend(p.log.iter().map(|e| e.replay_command.clone()));
    }
    cmds.extend(v.mailbox.iter().map(|m| m.roll_command.clone()));
    assert!(cmds.len() > 10);
    for c in cmds {
        let mut t = replay(5);
        t.apply_line("run 40").unwrap();
        let out = t.apply_line(&c).unwrap_or_else(|e| panic!("{c}: {e}"));
        assert_eq!(out.outcome.as_deref(), Some("done"), "{c}");
    }
}

fn check_faithful(s: &Session) -> Result<(), TestCaseError> {
    let v = s.snapshot();
    let sys = &s.state().system;
    prop_assert_eq!(v.processes.len(), sys.procs.len());
    for (pv, (pid, p)) in v.processes.iter().zip(&sys.procs) {
        prop_assert_eq!(pv.pid, *pid);
        prop_assert_eq!(pv.history.len(), p.history_len());
        for (h, item) in pv.history.iter().zip(p.history()) {
            prop_assert_eq!(&h.kind, item.action().kind());
        }
        let log: Vec<String> = sys.log.events(*pid).map(|e| e.to_string()).collect();
        let shown: Vec<String> = pv.log.iter().map(|e| e.event.clone()).collect();
        prop_assert_eq!(shown, log);
        let env: Vec<(String, String)> = p.config.env.iter().map(|(x, v)| (x.to_string(), v.to_string())).collect();
        let shown: Vec<(String, String)> = pv.env.iter().map(|b| (b.var.clone(), b.value.clone())).collect();
        prop_assert!(shown.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert_eq!(shown, env);
        prop_assert_eq!(pv.stack_depth, p.config.stack.depth());
        prop_assert_eq!(&pv.output, &p.output);
    }
    let ids: Vec<u64> = sys.gamma.iter().map(|m| m.id.0).collect();
    prop_assert_eq!(v.mailbox.iter().map(|m| m.id).collect::<Vec<_>>(), ids);
    prop_assert_eq!(v.requests.len(), s.state().stack().count());
    prop_assert_eq!(v.trace_len, s.state().trace.len());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn views_are_faithful(seed in 0u64..500, cmds in prop::collection::vec((0usize..6, 0u64..3, 1usize..6), 1..12)) {
        let mut s = replay(seed);
        check_faithful(&s)?;
        for (c, p, n) in cmds {
            let line = match c {
                0 => format!("step <0.{p}.0> {n}"),
                1 => format!("back <0.{p}.0> {n}"),
                2 => format!("run {n}"),
                3 => format!("roll-send <0.{p}.0> {n}"),
                4 => "undo".to_string(),
                _ => format!("roll-creation <0.{p}.0>"),
            };
            let before = json(&s.snapshot());
            if s.apply_line(&line).is_err() {
                prop_assert_eq!(json(&s.snapshot()), before);
            }
            check_faithful(&s)?;
        }
    }
}
