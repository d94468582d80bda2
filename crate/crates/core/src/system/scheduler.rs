use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::standard::{Enabled, StdSystem};
use super::{Derivation, SystemLog};
use crate::syntax::Pid;

pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    RoundRobin,
    Random,
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "roundrobin" | "round-robin" | "rr" => Ok(Policy::RoundRobin),
            "random" => Ok(Policy::Random),
            _ => Err(format!("unknown scheduler {s:?} (expected roundrobin or random)")),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::RoundRobin => "roundrobin",
            Policy::Random => "random",
        })
    }
}

/// Picks which enabled step to take next. Deterministic for a given seed.
#[derive(Clone, Debug)]
pub struct Scheduler {
    policy: Policy,
    rng: ChaCha8Rng,
    last: Option<Pid>,
}

impl Scheduler {
    pub fn new(policy: Policy, seed: u64) -> Self {
        Scheduler {
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
        }
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Index into `enabled`, which must be non-empty and sorted by pid.
    ///
    /// Round robin moves to the next pid after the one that stepped last and
    /// takes its first entry.
    pub fn choose(&mut self, enabled: &[Enabled]) -> usize {
        assert!(!enabled.is_empty(), "nothing to schedule");
        let i = match self.policy {
            Policy::Random => self.rng.gen_range(0..enabled.len()),
            Policy::RoundRobin => match self.last {
                Some(last) => enabled.iter().position(|e| e.pid > last).unwrap_or(0),
                None => 0,
            },
        };
        self.last = Some(enabled[i].pid);
        i
    }
}

/// The result of running a system to quiescence.
#[derive(Clone, Debug)]
pub struct Trace {
    pub system: StdSystem,
    pub derivation: Derivation,
}

impl Trace {
    pub fn log(&self) -> SystemLog {
        self.derivation.log()
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum TraceError {
    #[error("step limit of {limit} reached")]
    StepLimitExceeded { limit: usize, partial: Box<Trace> },
}

/// Run `system` until no process can move, recording the derivation.
pub fn run_trace(mut system: StdSystem, scheduler: &mut Scheduler, max_steps: usize) -> Result<Trace, TraceError> {
    let mut derivation = Derivation::new(system.origin.clone());
    loop {
        let enabled = system.enabled();
        if enabled.is_empty() {
            return Ok(Trace { system, derivation });
        }
        if derivation.len() >= max_steps {
            return Err(TraceError::StepLimitExceeded {
                limit: max_steps,
                partial: Box::new(Trace { system, derivation }),
            });
        }
        let e = enabled[scheduler.choose(&enabled)];
        let t = system
            .step(e.pid, Some(e.action))
            .expect("enabled step must be performable");
        derivation.steps.push(t);
    }
}
