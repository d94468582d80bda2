mod common;

use std::collections::BTreeSet;

use common::{init, rev, rng, trace, walk};
use proptest::prelude::*;
use rand::Rng;
use revdbg_core::causality::{causally_equivalent, decode_log, encode_log};
use revdbg_core::corpus;
use revdbg_core::eval::{peek_step, step_expr};
use revdbg_core::reversible::to_reversible;
use revdbg_core::syntax::{FutureId, Pid, Value};
use revdbg_core::system::{Action, LogEvent, StdSystem};

fn same_state(a: &StdSystem, b: &StdSystem) -> bool {
    a.gamma == b.gamma && a.procs == b.procs
}

#[test]
fn generated_programs_terminate_cleanly() {
    for seed in 0..40 {
        let g = corpus::generate(seed);
        for s in 0..3 {
            let t = trace(&g.source, &g.entry, s);
            assert!(t.system.all_terminated(), "seed {seed}/{s}:\n{}", g.source);
            assert!(t.system.gamma.is_empty(), "seed {seed}/{s}");
            assert!(matches!(t.system.procs[&Pid(0)].config.result(), Some(Value::Int(_))));
        }
    }
}

#[test]
fn stock_first_events_are_spawns() {
    let t = trace(corpus::STOCK, "main", 1);
    let main: Vec<_> = t.log().events(Pid(0)).copied().take(2).collect();
    assert_eq!(main, vec![LogEvent::Spawn(Pid(1)), LogEvent::Spawn(Pid(2))]);
    let fact = trace(corpus::FACTORIAL, "fact(5)", 3);
    assert!(fact.log().is_empty());
    assert_eq!(fact.system.procs[&Pid(0)].config.result(), Some(Value::Int(120)));
}

#[test]
fn stock_seeds_give_different_outputs() {
    let outputs: BTreeSet<String> = (0..40)
        .map(|s| trace(corpus::STOCK, "main", s).system.procs[&Pid(1)].output.clone())
        .collect();
    assert!(outputs.len() > 1, "{outputs:?}");
    assert!(outputs.iter().all(|o| o.starts_with("Stock: ")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn tracing_is_deterministic_and_names_are_fresh(prog in 0u64..500, seed in 0u64..1000) {
        let g = corpus::generate(prog);
        let a = trace(&g.source, &g.entry, seed);
        let b = trace(&g.source, &g.entry, seed);
        prop_assert_eq!(&a.derivation, &b.derivation);
        prop_assert_eq!(a.log(), b.log());
        let mut labels = BTreeSet::new();
        let mut pids = BTreeSet::new();
        let mut in_flight: i64 = 0;
        for t in &a.derivation.steps {
            match t.action {
                Action::Send(l) => { prop_assert!(labels.insert(l)); in_flight += 1; }
                Action::Rec(_) => in_flight -= 1,
                Action::Spawn(p) => prop_assert!(pids.insert(p)),
                _ => {}
            }
            prop_assert!(in_flight >= 0);
        }
        prop_assert_eq!(in_flight as usize, a.system.gamma.len());
    }

    #[test]
    fn peeking_matches_stepping(prog in 0u64..500, seed in 0u64..1000) {
        let g = corpus::generate(prog);
        let mut s = init(&g.source, &g.entry);
        let mut r = rng(seed);
        loop {
            for p in s.procs.values() {
                let step = step_expr(&s.program, &p.config, FutureId(0));
                prop_assert_eq!(peek_step(&s.program, &p.config), step.map(|x| x.label.step_kind()));
            }
            let en = s.enabled();
            if en.is_empty() { break; }
            let e = en[r.gen_range(0..en.len())];
            s.step(e.pid, Some(e.action)).unwrap();
        }
    }

    #[test]
    fn independent_steps_commute(prog in 0u64..500, seed in 0u64..1000, depth in 0usize..40) {
        let g = corpus::generate(prog);
        let mut s = init(&g.source, &g.entry);
        let mut r = rng(seed);
        for _ in 0..depth {
            let en = s.enabled();
            if en.is_empty() { break; }
            let e = en[r.gen_range(0..en.len())];
            s.step(e.pid, Some(e.action)).unwrap();
        }
        let en = s.enabled();
        for (i, a) in en.iter().enumerate() {
            for b in &en[i + 1..] {
                if a.pid == b.pid { continue; }
                let mut x = s.clone();
                let ta = x.step(a.pid, None).unwrap();
                let tb = x.step(b.pid, if matches!(b.action, Action::Rec(_)) { Some(b.action) } else { None }).unwrap();
                let mut y = s.clone();
                y.step(b.pid, Some(tb.action)).unwrap();
                y.step(a.pid, Some(ta.action)).unwrap();
                prop_assert!(same_state(&x, &y));
            }
        }
    }

    #[test]
    fn loop_lemma_in_replay_mode(prog in 0u64..500, seed in 0u64..1000, order in 0u64..1000) {
        let g = corpus::generate(prog);
        let log = trace(&g.source, &g.entry, seed).log();
        let mut rs = to_reversible(init(&g.source, &g.entry), Some(log)).unwrap();
        let mut r = rng(order);
        for _ in 0..150 {
            let fwd = rs.fwd_enabled();
            let bwd = rs.bwd_enabled();
            if fwd.is_empty() && bwd.is_empty() { break; }
            for e in &fwd {
                let mut probe = rs.clone();
                probe.fwd_step(e.pid, None).unwrap();
                probe.bwd_step(e.pid).unwrap();
                prop_assert!(probe == rs);
            }
            if !bwd.is_empty() && (fwd.is_empty() || r.gen_bool(0.3)) {
                rs.bwd_step(bwd[r.gen_range(0..bwd.len())].pid).unwrap();
            } else {
                rs.fwd_step(fwd[r.gen_range(0..fwd.len())].pid, None).unwrap();
            }
        }
    }

    #[test]
    fn loop_lemma_on_generated_programs(prog in 0u64..500, seed in 0u64..1000) {
        let g = corpus::generate(prog);
        let mut rs = rev(&g.source, &g.entry);
        let mut r = rng(seed);
        for _ in 0..150 {
            let fwd = rs.fwd_enabled();
            let bwd = rs.bwd_enabled();
            if fwd.is_empty() && bwd.is_empty() { break; }
            if !fwd.is_empty() {
                let e = &fwd[r.gen_range(0..fwd.len())];
                let pick = if let Action::Rec(l) = e.action { Some(l) } else { None };
                let mut probe = rs.clone();
                probe.fwd_step(e.pid, pick).unwrap();
                probe.bwd_step(e.pid).unwrap();
                // undoing always moves the event to the log, so a step that
                // drew a fresh name leaves it behind
                let mut expected = rs.clone();
                if let Some(ev) = e.action.log_event() {
                    if rs.log.head(e.pid) != Some(ev) {
                        expected.log.push_front(e.pid, ev);
                    }
                }
                prop_assert!(probe == expected);
            }
            for b in &bwd {
                let mut probe = rs.clone();
                probe.bwd_step(b.pid).unwrap();
                let pick = if let Action::Rec(l) = b.action { Some(l) } else { None };
                probe.fwd_step(b.pid, pick).unwrap();
                prop_assert!(probe == rs);
            }
            let go_back = !bwd.is_empty() && (fwd.is_empty() || r.gen_bool(0.3));
            if go_back {
                rs.bwd_step(bwd[r.gen_range(0..bwd.len())].pid).unwrap();
            } else {
                let e = &fwd[r.gen_range(0..fwd.len())];
                let pick = if let Action::Rec(l) = e.action { Some(l) } else { None };
                rs.fwd_step(e.pid, pick).unwrap();
            }
        }
    }

    #[test]
    fn erasing_histories_gives_a_standard_derivation(prog in 0u64..500, seed in 0u64..1000) {
        let g = corpus::generate(prog);
        let mut rs = rev(&g.source, &g.entry);
        let mut r = rng(seed);
        let mut std_sys = init(&g.source, &g.entry);
        for _ in 0..300 {
            let en = rs.fwd_enabled();
            if en.is_empty() { break; }
            let e = &en[r.gen_range(0..en.len())];
            let pick = if let Action::Rec(l) = e.action { Some(l) } else { None };
            let done = rs.fwd_step(e.pid, pick).unwrap();
            let t = std_sys.step(e.pid, Some(done.action)).unwrap();
            prop_assert_eq!(t.action, done.action);
        }
        prop_assert!(same_state(&rs.erase(), &std_sys));
    }

    #[test]
    fn replay_consumes_the_log(prog in 0u64..500, seed in 0u64..1000, order in 0u64..1000) {
        let g = corpus::generate(prog);
        let t = trace(&g.source, &g.entry, seed);
        let log = t.log();
        let mut rs = to_reversible(init(&g.source, &g.entry), Some(log.clone())).unwrap();
        let mut r = rng(order);
        let mut replayed = revdbg_core::system::Derivation::new(rs.origin.clone());
        loop {
            let en = rs.fwd_enabled();
            if en.is_empty() { break; }
            let e = &en[r.gen_range(0..en.len())];
            let done = rs.fwd_step(e.pid, None).unwrap();
            replayed.push(e.pid, done.action);
        }
        prop_assert!(rs.log.is_empty());
        prop_assert_eq!(replayed.log(), log);
        prop_assert!(causally_equivalent(&replayed, &t.derivation).unwrap());
        for (pid, p) in &t.system.procs {
            let q = rs.process(*pid).unwrap();
            prop_assert_eq!(&q.config.result(), &p.config.result());
            prop_assert_eq!(&q.output, &p.output);
        }
    }

    #[test]
    fn log_files_round_trip(prog in 0u64..500, seed in 0u64..1000) {
        let g = corpus::generate(prog);
        let log = trace(&g.source, &g.entry, seed).log();
        let text = encode_log(&log);
        let back = decode_log(&text).unwrap();
        prop_assert_eq!(&back, &log);
        prop_assert_eq!(encode_log(&back), text);
    }
}

#[test]
fn equal_logs_mean_equivalent_runs() {
    let runs: Vec<_> = (0..200).map(|s| trace(corpus::THREE, "main", s)).collect();
    for a in &runs {
        for b in &runs {
            let same_log = a.log() == b.log();
            assert_eq!(same_log, causally_equivalent(&a.derivation, &b.derivation).unwrap());
        }
    }
}

#[test]
fn labels_stay_unique_after_mixed_walks() {
    for seed in 0..30 {
        let mut rs = rev(corpus::STOCK, "main");
        let mut r = rng(seed);
        for _ in 0..200 {
            walk(&mut rs, &mut r, 3);
            for _ in 0..r.gen_range(0..4) {
                let bwd = rs.bwd_enabled();
                if bwd.is_empty() {
                    break;
                }
                rs.bwd_step(bwd[r.gen_range(0..bwd.len())].pid).unwrap();
            }
        }
        let mut sends = BTreeSet::new();
        let mut recs = BTreeSet::new();
        for p in rs.procs.values() {
            for h in p.history() {
                match h.action() {
                    Action::Send(l) => assert!(sends.insert(l), "{l} sent twice"),
                    Action::Rec(l) => assert!(recs.insert(l), "{l} received twice"),
                    _ => {}
                }
            }
        }
        let performed = sends.clone();
        for (_, q) in rs.log.iter() {
            for e in q {
                match e {
                    LogEvent::Send(l) => assert!(sends.insert(*l), "{l} both sent and pending"),
                    LogEvent::Rec(l) => assert!(recs.insert(*l), "{l} both received and pending"),
                    LogEvent::Spawn(_) => {}
                }
            }
        }
        for m in rs.gamma.iter() {
            assert!(performed.contains(&m.id));
            assert!(rs.procs.values().all(|p| p.history().all(|h| h.action() != Action::Rec(m.id))));
        }
    }
}
