//! Systems of processes communicating through a global mailbox, with the
//! tracing semantics that records logs.

mod exec;
mod scheduler;
mod standard;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

pub use exec::{acceptable, next_kind, perform, Effect, Performed, Refusal};
pub use scheduler::{run_trace, Policy, Scheduler, Trace, TraceError, DEFAULT_MAX_STEPS};
pub use standard::{entry_expr, origin_of, Enabled, ProcStatus, StdProcess, StdSystem};

use crate::syntax::{Pid, Value};

/// Message label ℓ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct MsgId(pub u64);

impl fmt::Display for MsgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `(sender, target, {value, ℓ})`
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedMsg {
    pub sender: Pid,
    pub target: Pid,
    pub value: Value,
    pub id: MsgId,
}

/// The global mailbox Γ. Labels are unique, so the multiset is keyed by them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mailbox(BTreeMap<MsgId, TaggedMsg>);

impl Mailbox {
    pub fn new() -> Self {
        Mailbox::default()
    }

    pub fn insert(&mut self, m: TaggedMsg) {
        let prev = self.0.insert(m.id, m);
        debug_assert!(prev.is_none(), "message label reused");
    }

    pub fn remove(&mut self, id: MsgId) -> Option<TaggedMsg> {
        self.0.remove(&id)
    }

    pub fn get(&self, id: MsgId) -> Option<&TaggedMsg> {
        self.0.get(&id)
    }

    pub fn contains(&self, id: MsgId) -> bool {
        self.0.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Messages in label order.
    pub fn iter(&self) -> impl Iterator<Item = &TaggedMsg> {
        self.0.values()
    }

    pub fn addressed_to(&self, pid: Pid) -> impl Iterator<Item = &TaggedMsg> {
        self.0.values().filter(move |m| m.target == pid)
    }

    pub fn max_id(&self) -> Option<MsgId> {
        self.0.keys().next_back().copied()
    }
}

/// The label of a system transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Seq,
    Send(MsgId),
    Rec(MsgId),
    Spawn(Pid),
    SelfPid,
}

impl Action {
    /// The log event this action contributes, if any.
    pub fn log_event(self) -> Option<LogEvent> {
        match self {
            Action::Send(l) => Some(LogEvent::Send(l)),
            Action::Rec(l) => Some(LogEvent::Rec(l)),
            Action::Spawn(p) => Some(LogEvent::Spawn(p)),
            Action::Seq | Action::SelfPid => None,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            Action::Seq => "seq",
            Action::Send(_) => "send",
            Action::Rec(_) => "rec",
            Action::Spawn(_) => "spawn",
            Action::SelfPid => "self",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Seq => f.write_str("seq"),
            Action::Send(l) => write!(f, "send({l})"),
            Action::Rec(l) => write!(f, "rec({l})"),
            Action::Spawn(p) => write!(f, "spawn({p})"),
            Action::SelfPid => f.write_str("self"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogEvent {
    Spawn(Pid),
    Send(MsgId),
    Rec(MsgId),
}

impl LogEvent {
    pub fn matches(self, action: Action) -> bool {
        action.log_event() == Some(self)
    }
}

impl fmt::Display for LogEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEvent::Spawn(p) => write!(f, "spawn({p})"),
            LogEvent::Send(l) => write!(f, "send({l})"),
            LogEvent::Rec(l) => write!(f, "rec({l})"),
        }
    }
}

/// A system log W: for each pid, the sequence of its concurrent events.
///
/// Processes with no events have no entry, so two logs are equal exactly
/// when they assign the same events to every pid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SystemLog(BTreeMap<Pid, VecDeque<LogEvent>>);

impl SystemLog {
    pub fn new() -> Self {
        SystemLog::default()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn events(&self, pid: Pid) -> impl Iterator<Item = &LogEvent> {
        self.0.get(&pid).into_iter().flatten()
    }

    pub fn len_of(&self, pid: Pid) -> usize {
        self.0.get(&pid).map_or(0, VecDeque::len)
    }

    /// Total number of events.
    pub fn total(&self) -> usize {
        self.0.values().map(VecDeque::len).sum()
    }

    pub fn head(&self, pid: Pid) -> Option<LogEvent> {
        self.0.get(&pid).and_then(|q| q.front().copied())
    }

    pub fn pids(&self) -> impl Iterator<Item = Pid> + '_ {
        self.0.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pid, &VecDeque<LogEvent>)> {
        self.0.iter().map(|(p, q)| (*p, q))
    }

    pub fn push_back(&mut self, pid: Pid, ev: LogEvent) {
        self.0.entry(pid).or_default().push_back(ev);
    }

    pub fn push_front(&mut self, pid: Pid, ev: LogEvent) {
        self.0.entry(pid).or_default().push_front(ev);
    }

    pub fn pop_front(&mut self, pid: Pid) -> Option<LogEvent> {
        let q = self.0.get_mut(&pid)?;
        let ev = q.pop_front();
        if q.is_empty() {
            self.0.remove(&pid);
        }
        ev
    }

    /// The pid whose events include `send(ℓ)`.
    pub fn sender_of(&self, l: MsgId) -> Option<Pid> {
        self.find(LogEvent::Send(l))
    }

    /// The pid whose events include `spawn(p)`.
    pub fn parent_of(&self, p: Pid) -> Option<Pid> {
        self.find(LogEvent::Spawn(p))
    }

    fn find(&self, ev: LogEvent) -> Option<Pid> {
        self.0
            .iter()
            .find(|(_, q)| q.contains(&ev))
            .map(|(p, _)| *p)
    }

    /// Check the well-formedness conditions of a log: every `rec(ℓ)` has
    /// exactly one `send(ℓ)` (unless `in_flight` says ℓ is already in Γ),
    /// no label is sent or received twice, no pid is spawned twice.
    pub fn validate(&self, in_flight: impl Fn(MsgId) -> bool) -> Result<(), String> {
        use std::collections::BTreeSet;
        let mut sent = BTreeSet::new();
        let mut received = BTreeSet::new();
        let mut spawned = BTreeSet::new();
        for (p, q) in &self.0 {
            for ev in q {
                match *ev {
                    LogEvent::Send(l) if !sent.insert(l) => return Err(format!("message {l} is sent twice")),
                    LogEvent::Rec(l) if !received.insert(l) => {
                        return Err(format!("message {l} is received twice"))
                    }
                    LogEvent::Spawn(c) if c == *p => return Err(format!("{p} spawns itself")),
                    LogEvent::Spawn(c) if !spawned.insert(c) => return Err(format!("{c} is spawned twice")),
                    _ => {}
                }
            }
        }
        if let Some(l) = received.iter().find(|l| !sent.contains(*l) && !in_flight(**l)) {
            return Err(format!("message {l} is received but never sent"));
        }
        Ok(())
    }

    /// Largest pid and message label mentioned anywhere.
    pub fn max_ids(&self) -> (Option<Pid>, Option<MsgId>) {
        let mut pid = self.0.keys().next_back().copied();
        let mut msg = None;
        for ev in self.0.values().flatten() {
            match *ev {
                LogEvent::Spawn(p) => pid = pid.max(Some(p)),
                LogEvent::Send(l) | LogEvent::Rec(l) => msg = msg.max(Some(l)),
            }
        }
        (pid, msg)
    }
}

impl FromIterator<(Pid, LogEvent)> for SystemLog {
    fn from_iter<I: IntoIterator<Item = (Pid, LogEvent)>>(iter: I) -> Self {
        let mut log = SystemLog::new();
        for (p, e) in iter {
            log.push_back(p, e);
        }
        log
    }
}

impl fmt::Display for SystemLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, q) in &self.0 {
            write!(f, "{p}:")?;
            for e in q {
                write!(f, " {e}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// One step `s ↪_{p,r} s'` of a derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub pid: Pid,
    pub action: Action,
}

/// An ordered sequence of transitions from an identified initial system.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Derivation {
    /// Fingerprint of the initial system (program and entry point).
    pub origin: String,
    pub steps: Vec<Transition>,
}

impl Derivation {
    pub fn new(origin: impl Into<String>) -> Self {
        Derivation {
            origin: origin.into(),
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, pid: Pid, action: Action) {
        self.steps.push(Transition { pid, action });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Per-process projection onto spawn/send/rec events.
    pub fn log(&self) -> SystemLog {
        self.steps
            .iter()
            .filter_map(|t| t.action.log_event().map(|e| (t.pid, e)))
            .collect()
    }
}

/// Fresh-name counters. They only grow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Allocators {
    pub next_pid: u64,
    pub next_msg: u64,
    pub next_future: u64,
}

impl Allocators {
    /// Make sure names up to and including the given ones are never handed
    /// out again.
    pub fn reserve(&mut self, pid: Option<Pid>, msg: Option<MsgId>) {
        if let Some(p) = pid {
            self.next_pid = self.next_pid.max(p.0 + 1);
        }
        if let Some(l) = msg {
            self.next_msg = self.next_msg.max(l.0 + 1);
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("no process {0}")]
    UnknownPid(Pid),
    #[error("{pid} cannot perform {what}: {reason}")]
    NotEnabled { pid: Pid, what: String, reason: String },
    #[error("unknown entry point {0}")]
    UnknownEntry(String),
}
