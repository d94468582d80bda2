#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revdbg_core::reversible::{to_reversible, RevSystem};
use revdbg_core::syntax::parse_program;
use revdbg_core::system::{run_trace, Policy, Scheduler, StdSystem, Trace};

pub fn init(src: &str, entry: &str) -> StdSystem {
    StdSystem::init(Arc::new(parse_program(src).expect("parses")), entry).expect("entry resolves")
}

pub fn trace(src: &str, entry: &str, seed: u64) -> Trace {
    run_trace(init(src, entry), &mut Scheduler::new(Policy::Random, seed), 100_000).expect("terminates")
}

pub fn rev(src: &str, entry: &str) -> RevSystem {
    to_reversible(init(src, entry), None).unwrap()
}

/// A random forward walk of at most `n` steps.
pub fn walk(rs: &mut RevSystem, rng: &mut ChaCha8Rng, n: usize) {
    for _ in 0..n {
        let en = rs.fwd_enabled();
        if en.is_empty() {
            return;
        }
        let e = &en[rng.gen_range(0..en.len())];
        let pick = match e.action {
            revdbg_core::system::Action::Rec(l) => Some(l),
            _ => None,
        };
        rs.fwd_step(e.pid, pick).unwrap();
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
