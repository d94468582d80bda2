//! Controlled semantics: a stack of requests drives the reversible steps,
//! pushing requests for causal dependencies when the top one is blocked.

mod request;

use std::fmt;

pub use request::{parse_requests, RequestError};

use crate::reversible::{BwdBlocker, Direction, Mark, RevSystem, SatisfiedSet};
use crate::syntax::{Pid, Var};
use crate::system::{next_kind, Action, LogEvent, MsgId, SystemLog};

pub const DEFAULT_FUEL: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Goal {
    /// `s`: one step.
    Step,
    /// `ℓ⇑`: up to (forward) or undoing (backward) the send of ℓ.
    Send(MsgId),
    /// `ℓ⇓`: the receive of ℓ.
    Rec(MsgId),
    /// `sp_p`: the spawn of p.
    Spawn(Pid),
    /// `sp⃖`: undo everything back to the creation of the process.
    Creation,
    /// Undo back to the introduction of a variable.
    Var(Var),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Request {
    pub pid: Pid,
    pub goal: Goal,
    pub dir: Direction,
}

impl Request {
    pub fn new(pid: Pid, goal: Goal, dir: Direction) -> Self {
        Request { pid, goal, dir }
    }

    fn mark(&self) -> Option<Mark> {
        Some(match &self.goal {
            Goal::Step => Mark::Step,
            Goal::Send(l) => Mark::Sent(*l),
            Goal::Rec(l) => Mark::Received(*l),
            Goal::Spawn(p) => Mark::Spawned(*p),
            Goal::Var(x) => Mark::Var(x.clone()),
            Goal::Creation => return None,
        })
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.dir {
            Direction::Forward => "→",
            Direction::Backward => "←",
        };
        match &self.goal {
            Goal::Step => write!(f, "{{{}, s{arrow}}}", self.pid),
            Goal::Send(l) => write!(f, "{{{}, {l}⇑{arrow}}}", self.pid),
            Goal::Rec(l) => write!(f, "{{{}, {l}⇓{arrow}}}", self.pid),
            Goal::Spawn(p) => write!(f, "{{{}, sp_{p}{arrow}}}", self.pid),
            Goal::Creation => write!(f, "{{{}, sp{arrow}}}", self.pid),
            Goal::Var(x) => write!(f, "{{{}, {x}{arrow}}}", self.pid),
        }
    }
}

/// Whether an uncontrolled step satisfies a request.
pub fn satisfies(req: &Request, pid: Pid, sat: &SatisfiedSet, dir: Direction) -> bool {
    req.pid == pid && req.dir == dir && req.mark().is_some_and(|m| sat.contains(&m))
}

/// The process whose log contains `send(ℓ)`.
pub fn sender_of(w: &SystemLog, l: MsgId) -> Option<Pid> {
    w.sender_of(l)
}

/// The process whose log contains `spawn(p)`.
pub fn parent_of(w: &SystemLog, p: Pid) -> Option<Pid> {
    w.parent_of(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub pid: Pid,
    pub action: Action,
    pub dir: Direction,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.dir {
            Direction::Forward => "fwd",
            Direction::Backward => "bwd",
        };
        write!(f, "{d} {} {}", self.pid, self.action)
    }
}

/// One rewrite of the controlled semantics.
#[derive(Clone, Debug, PartialEq)]
pub enum Rewrite {
    /// An uncontrolled step; `popped` when it satisfied the top request.
    Stepped { step: TraceStep, popped: bool },
    /// A dependency request was pushed.
    Pushed(Request),
    /// The top request was discharged without a step.
    Popped(Request),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Blocked(String),
    FuelExhausted,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Done => f.write_str("done"),
            Outcome::Blocked(r) => write!(f, "blocked: {r}"),
            Outcome::FuelExhausted => f.write_str("fuel exhausted"),
        }
    }
}

/// `⌊⌊ s ⌋⌋_Φ` plus the uncontrolled steps taken so far.
#[derive(Clone, Debug)]
pub struct ControlledState {
    pub system: RevSystem,
    /// Top of the stack is the last element.
    stack: Vec<Request>,
    pub trace: Vec<TraceStep>,
}

impl ControlledState {
    pub fn new(system: RevSystem) -> Self {
        ControlledState {
            system,
            stack: Vec::new(),
            trace: Vec::new(),
        }
    }

    /// Requests, top first.
    pub fn stack(&self) -> impl Iterator<Item = &Request> {
        self.stack.iter().rev()
    }

    pub fn top(&self) -> Option<&Request> {
        self.stack.last()
    }

    pub fn clear_requests(&mut self) {
        self.stack.clear();
    }

    /// Push user requests so that the first one is serviced first.
    pub fn push_requests(&mut self, reqs: impl IntoIterator<Item = Request, IntoIter: DoubleEndedIterator>) {
        self.stack.extend(reqs.into_iter().rev());
    }

    /// `Err(reason)` when no controlled rule applies.
    pub fn controlled_step(&mut self) -> Result<Option<Rewrite>, String> {
        let Some(req) = self.stack.last().cloned() else {
            return Ok(None);
        };
        match req.dir {
            Direction::Forward => self.forward(req).map(Some),
            Direction::Backward => self.backward(req).map(Some),
        }
    }

    pub fn run_controlled(&mut self, fuel: usize) -> Outcome {
        for _ in 0..fuel {
            match self.controlled_step() {
                Ok(Some(_)) => {}
                Ok(None) => return Outcome::Done,
                Err(reason) => return Outcome::Blocked(reason),
            }
        }
        if self.stack.is_empty() {
            Outcome::Done
        } else {
            Outcome::FuelExhausted
        }
    }

    fn push_dependency(&mut self, dep: Request) -> Result<Rewrite, String> {
        if self.stack.contains(&dep) {
            return Err(format!("cyclic dependency on {dep}"));
        }
        self.stack.push(dep.clone());
        Ok(Rewrite::Pushed(dep))
    }

    fn record(&mut self, req: &Request, pid: Pid, action: Action, sat: &SatisfiedSet, dir: Direction) -> Rewrite {
        let step = TraceStep { pid, action, dir };
        self.trace.push(step);
        let popped = satisfies(req, pid, sat, dir);
        if popped {
            self.stack.pop();
        }
        Rewrite::Stepped { step, popped }
    }

    fn forward(&mut self, req: Request) -> Result<Rewrite, String> {
        let sys = &self.system;
        let p = req.pid;
        if !sys.procs.contains_key(&p) {
            let parent = sys
                .log
                .parent_of(p)
                .ok_or_else(|| format!("{p} does not exist and no log entry spawns it"))?;
            return self.push_dependency(Request::new(parent, Goal::Spawn(p), Direction::Forward));
        }
        let enabled = sys.fwd_enabled_for(p);
        if !enabled.is_empty() {
            let chosen = enabled
                .iter()
                .find(|e| satisfies(&req, p, &e.sat, Direction::Forward))
                .unwrap_or(&enabled[0]);
            let pick = match chosen.action {
                Action::Rec(l) => Some(l),
                _ => None,
            };
            let done = self.system.fwd_step(p, pick).map_err(|e| e.to_string())?;
            return Ok(self.record(&req, p, done.action, &done.sat, Direction::Forward));
        }
        let cfg = &sys.procs[&p].config;
        match next_kind(&sys.program, cfg) {
            Ok("rec") => {
                let wanted = match (sys.log.head(p), &req.goal) {
                    (Some(LogEvent::Rec(l)), _) => l,
                    (_, Goal::Rec(l)) => *l,
                    _ => return Err(format!("{p} is waiting for a message that is not in the mailbox")),
                };
                if sys.gamma.contains(wanted) {
                    return Err(format!("message {wanted} does not match the receive of {p}"));
                }
                let sender = sys
                    .log
                    .sender_of(wanted)
                    .ok_or_else(|| format!("message {wanted} has not been sent and the log has no sender for it"))?;
                self.push_dependency(Request::new(sender, Goal::Send(wanted), Direction::Forward))
            }
            Ok(kind) => Err(format!("{p} cannot take a logged {kind} step")),
            Err(r) => Err(format!("{p}: {r}")),
        }
    }

    fn backward(&mut self, req: Request) -> Result<Rewrite, String> {
        let p = req.pid;
        let Some(proc_) = self.system.procs.get(&p) else {
            if req.goal == Goal::Creation {
                self.stack.pop();
                return Ok(Rewrite::Popped(req));
            }
            return Err(format!("no process {p}"));
        };
        if proc_.history_len() == 0 {
            if req.goal == Goal::Creation {
                self.stack.pop();
                return Ok(Rewrite::Popped(req));
            }
            return Err(format!("{p} has nothing left to undo"));
        }
        if let Some(e) = self.system.bwd_enabled_for(p) {
            self.system.bwd_step(p).map_err(|e| e.to_string())?;
            return Ok(self.record(&req, p, e.action, &e.sat, Direction::Backward));
        }
        match self.system.bwd_blocker(p) {
            Some(BwdBlocker::Received { receiver, id }) => {
                self.push_dependency(Request::new(receiver, Goal::Rec(id), Direction::Backward))
            }
            Some(BwdBlocker::ChildActive(c)) => {
                self.push_dependency(Request::new(c, Goal::Creation, Direction::Backward))
            }
            Some(b @ BwdBlocker::ChildMissing(_)) => Err(b.to_string()),
            None => Err(format!("{p} cannot step backward")),
        }
    }

    /// Reject requests that can never be satisfied from the current state.
    pub fn check_feasible(&self, req: &Request) -> Result<(), String> {
        let sys = &self.system;
        let known = sys.procs.contains_key(&req.pid) || sys.log.pids().any(|q| q == req.pid) || sys.log.parent_of(req.pid).is_some();
        if !known {
            return Err(format!("no process {}", req.pid));
        }
        if req.dir == Direction::Forward {
            return Ok(());
        }
        let Some(proc_) = sys.procs.get(&req.pid) else {
            return if req.goal == Goal::Creation {
                Ok(())
            } else {
                Err(format!("no process {}", req.pid))
            };
        };
        let mut hist = proc_.history();
        let found = match &req.goal {
            Goal::Step | Goal::Creation => return Ok(()),
            Goal::Send(l) => hist.any(|h| h.action() == Action::Send(*l)),
            Goal::Rec(l) => hist.any(|h| h.action() == Action::Rec(*l)),
            Goal::Spawn(c) => hist.any(|h| h.action() == Action::Spawn(*c)),
            Goal::Var(x) => proc_.config.env.contains(x) || hist.any(|h| h.config.env.contains(x)),
        };
        if found {
            Ok(())
        } else {
            Err(format!("the history of {} does not contain the target of {req}", req.pid))
        }
    }
}
