//! Uncontrolled reversible semantics: forward steps that save history items
//! and consume the log, backward steps that restore them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::eval::Config;
use crate::syntax::{Pid, Program, Value, Var};
use crate::system::{
    acceptable, next_kind, perform, Action, Allocators, Effect, Mailbox, MsgId, Refusal, StdProcess, StdSystem,
    SystemLog, TaggedMsg,
};

/// What a history item remembers beyond the saved configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum HistKind {
    /// `out` is the length of the output buffer before the step, when the
    /// step printed something.
    Seq { out: Option<usize> },
    Send { target: Pid, value: Value, id: MsgId },
    Rec { sender: Pid, value: Value, id: MsgId },
    Spawn { child: Pid },
    SelfPid,
}

/// A history item: the configuration before the step, and what the step did.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryItem {
    pub config: Config,
    pub kind: HistKind,
}

impl HistoryItem {
    pub fn action(&self) -> Action {
        match &self.kind {
            HistKind::Seq { .. } => Action::Seq,
            HistKind::Send { id, .. } => Action::Send(*id),
            HistKind::Rec { id, .. } => Action::Rec(*id),
            HistKind::Spawn { child } => Action::Spawn(*child),
            HistKind::SelfPid => Action::SelfPid,
        }
    }
}

/// `⟨p, h, θ, e, S⟩` plus the output buffer.
#[derive(Clone, Debug)]
pub struct RevProcess {
    pub pid: Pid,
    /// Oldest first; the head of the history is the last element.
    hist: Vec<Arc<HistoryItem>>,
    pub config: Config,
    pub output: String,
}

impl RevProcess {
    pub fn new(pid: Pid, config: Config) -> Self {
        RevProcess {
            pid,
            hist: Vec::new(),
            config,
            output: String::new(),
        }
    }

    /// History items, newest first.
    pub fn history(&self) -> impl ExactSizeIterator<Item = &HistoryItem> + DoubleEndedIterator {
        self.hist.iter().rev().map(|h| &**h)
    }

    pub fn history_len(&self) -> usize {
        self.hist.len()
    }

    pub fn head(&self) -> Option<&HistoryItem> {
        self.hist.last().map(|h| &**h)
    }
}

impl PartialEq for RevProcess {
    fn eq(&self, other: &Self) -> bool {
        self.pid == other.pid
            && self.config == other.config
            && self.output == other.output
            && self.hist.len() == other.hist.len()
            && self
                .hist
                .iter()
                .zip(&other.hist)
                .all(|(a, b)| Arc::ptr_eq(a, b) || a == b)
    }
}

/// A satisfaction mark, the third subscript of the reversible relations.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mark {
    /// `s`: any step.
    Step,
    /// `ℓ⇑`: the send of ℓ.
    Sent(MsgId),
    /// `ℓ⇓`: the receive of ℓ.
    Received(MsgId),
    /// `sp_p`: the spawn of p.
    Spawned(Pid),
    /// A variable introduced by the (undone) step.
    Var(Var),
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mark::Step => f.write_str("s"),
            Mark::Sent(l) => write!(f, "{l}⇑"),
            Mark::Received(l) => write!(f, "{l}⇓"),
            Mark::Spawned(p) => write!(f, "sp_{p}"),
            Mark::Var(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SatisfiedSet(pub Vec<Mark>);

impl SatisfiedSet {
    pub fn contains(&self, m: &Mark) -> bool {
        self.0.contains(m)
    }

    fn of(action: Action) -> Self {
        let extra = match action {
            Action::Seq | Action::SelfPid => None,
            Action::Send(l) => Some(Mark::Sent(l)),
            Action::Rec(l) => Some(Mark::Received(l)),
            Action::Spawn(p) => Some(Mark::Spawned(p)),
        };
        SatisfiedSet(std::iter::once(Mark::Step).chain(extra).collect())
    }

    fn with_vars(mut self, vars: Vec<Var>) -> Self {
        self.0.extend(vars.into_iter().map(Mark::Var));
        self
    }
}

impl fmt::Display for SatisfiedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// An enabled reversible step.
#[derive(Clone, Debug, PartialEq)]
pub struct RevEnabled {
    pub pid: Pid,
    pub action: Action,
    pub sat: SatisfiedSet,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RevError {
    #[error("no process {0}")]
    UnknownPid(Pid),
    #[error("{pid} cannot step {dir}: {reason}")]
    NotEnabled { pid: Pid, dir: Direction, reason: String },
    #[error("malformed log: {0}")]
    MalformedLog(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// `W; Γ; Π`
#[derive(Clone, Debug)]
pub struct RevSystem {
    pub program: Arc<Program>,
    pub log: SystemLog,
    pub gamma: Mailbox,
    pub procs: BTreeMap<Pid, RevProcess>,
    pub alloc: Allocators,
    pub origin: String,
}

/// Allocators are left out: they only ever grow.
impl PartialEq for RevSystem {
    fn eq(&self, other: &Self) -> bool {
        self.log == other.log && self.gamma == other.gamma && self.procs == other.procs
    }
}

/// Wrap a standard system for reversible execution, driven by `log` if one
/// is given.
pub fn to_reversible(sys: StdSystem, log: Option<SystemLog>) -> Result<RevSystem, RevError> {
    let log = log.unwrap_or_default();
    log.validate(|l| sys.gamma.contains(l)).map_err(RevError::MalformedLog)?;
    if let Some(p) = log.iter().flat_map(|(_, q)| q.iter()).find_map(|e| match e {
        crate::system::LogEvent::Spawn(c) if sys.procs.contains_key(c) => Some(*c),
        _ => None,
    }) {
        return Err(RevError::MalformedLog(format!("{p} is spawned but already exists")));
    }
    let mut alloc = sys.alloc;
    let (p, l) = log.max_ids();
    alloc.reserve(p, l);
    alloc.reserve(None, sys.gamma.max_id());
    let procs = sys
        .procs
        .into_values()
        .map(|p| {
            let mut r = RevProcess::new(p.pid, p.config);
            r.output = p.output;
            (p.pid, r)
        })
        .collect();
    Ok(RevSystem {
        program: sys.program,
        log,
        gamma: sys.gamma,
        procs,
        alloc,
        origin: sys.origin,
    })
}

impl RevSystem {
    pub fn process(&self, pid: Pid) -> Option<&RevProcess> {
        self.procs.get(&pid)
    }

    /// Forget histories and log.
    pub fn erase(&self) -> StdSystem {
        StdSystem {
            program: self.program.clone(),
            gamma: self.gamma.clone(),
            procs: self
                .procs
                .values()
                .map(|p| {
                    (
                        p.pid,
                        StdProcess {
                            pid: p.pid,
                            config: p.config.clone(),
                            output: p.output.clone(),
                        },
                    )
                })
                .collect(),
            alloc: self.alloc,
            transcript: String::new(),
            origin: self.origin.clone(),
        }
    }

    /// The action the log forces on the next step of `pid`, given the kind
    /// of that step. `Err` when the log head contradicts the step.
    fn logged(&self, pid: Pid, kind: &str) -> Result<Option<Action>, Refusal> {
        if matches!(kind, "seq" | "self") {
            return Ok(None);
        }
        let Some(head) = self.log.head(pid) else {
            return Ok(None);
        };
        let a = match head {
            crate::system::LogEvent::Send(l) => Action::Send(l),
            crate::system::LogEvent::Rec(l) => Action::Rec(l),
            crate::system::LogEvent::Spawn(p) => Action::Spawn(p),
        };
        if a.kind() != kind {
            return Err(Refusal::Mismatch { wanted: a, actual: kind_name(kind) });
        }
        Ok(Some(a))
    }

    /// Forward steps available to `pid`.
    pub fn fwd_enabled_for(&self, pid: Pid) -> Vec<RevEnabled> {
        let Some(p) = self.procs.get(&pid) else {
            return Vec::new();
        };
        let Ok(kind) = next_kind(&self.program, &p.config) else {
            return Vec::new();
        };
        let Ok(forced) = self.logged(pid, kind) else {
            return Vec::new();
        };
        let actions = match (kind, forced) {
            ("seq", _) => vec![Action::Seq],
            ("self", _) => vec![Action::SelfPid],
            ("rec", forced) => {
                let ok = acceptable(pid, &p.config, &self.gamma);
                match forced {
                    Some(Action::Rec(l)) => ok.into_iter().filter(|m| *m == l).map(Action::Rec).collect(),
                    _ => ok.into_iter().map(Action::Rec).collect(),
                }
            }
            ("send", Some(a)) | ("spawn", Some(a)) => {
                if matches!(a, Action::Spawn(c) if self.procs.contains_key(&c)) {
                    Vec::new()
                } else {
                    vec![a]
                }
            }
            ("send", None) => vec![Action::Send(MsgId(self.alloc.next_msg))],
            ("spawn", None) => vec![Action::Spawn(Pid(self.alloc.next_pid))],
            _ => Vec::new(),
        };
        actions
            .into_iter()
            .map(|action| RevEnabled {
                pid,
                action,
                sat: SatisfiedSet::of(action),
            })
            .collect()
    }

    pub fn fwd_enabled(&self) -> Vec<RevEnabled> {
        self.procs.keys().flat_map(|p| self.fwd_enabled_for(*p)).collect()
    }

    /// Take a forward step of `pid`. `pick` selects the message for a
    /// receive when the log does not.
    pub fn fwd_step(&mut self, pid: Pid, pick: Option<MsgId>) -> Result<RevEnabled, RevError> {
        let not_enabled = |r: Refusal| RevError::NotEnabled {
            pid,
            dir: Direction::Forward,
            reason: r.to_string(),
        };
        let p = self.procs.get(&pid).ok_or(RevError::UnknownPid(pid))?;
        let kind = next_kind(&self.program, &p.config).map_err(not_enabled)?;
        let forced = match self.logged(pid, kind).map_err(not_enabled)? {
            Some(Action::Rec(l)) if pick.is_some_and(|m| m != l) => {
                return Err(not_enabled(Refusal::Mismatch {
                    wanted: Action::Rec(pick.unwrap()),
                    actual: "logged receive of another message",
                }))
            }
            Some(a) => Some(a),
            None if kind == "rec" => pick.map(Action::Rec),
            None => None,
        };
        let procs = &self.procs;
        let done = perform(&self.program, pid, &p.config, &self.gamma, &mut self.alloc, forced, |q| {
            procs.contains_key(&q)
        })
        .map_err(not_enabled)?;
        let saved = p.config.clone();
        let out_before = p.output.len();
        let kind = match done.effect {
            Effect::None => match done.action {
                Action::SelfPid => HistKind::SelfPid,
                _ => HistKind::Seq {
                    out: done.output.as_ref().map(|_| out_before),
                },
            },
            Effect::Sent(m) => {
                let k = HistKind::Send {
                    target: m.target,
                    value: m.value.clone(),
                    id: m.id,
                };
                self.gamma.insert(m);
                k
            }
            Effect::Received(m) => {
                self.gamma.remove(m.id);
                HistKind::Rec {
                    sender: m.sender,
                    value: m.value,
                    id: m.id,
                }
            }
            Effect::Spawned { child, config } => {
                self.procs.insert(child, RevProcess::new(child, config));
                HistKind::Spawn { child }
            }
        };
        if forced.is_some() && done.action.log_event().is_some() && self.log.head(pid) == done.action.log_event() {
            self.log.pop_front(pid);
        }
        let p = self.procs.get_mut(&pid).expect("present");
        p.hist.push(Arc::new(HistoryItem { config: saved, kind }));
        p.config = done.config;
        if let Some(o) = done.output {
            p.output.push_str(&o);
        }
        Ok(RevEnabled {
            pid,
            action: done.action,
            sat: SatisfiedSet::of(done.action),
        })
    }

    /// Why the head of `pid`'s history cannot be undone yet, if it cannot.
    pub fn bwd_blocker(&self, pid: Pid) -> Option<BwdBlocker> {
        let head = self.procs.get(&pid)?.head()?;
        match &head.kind {
            HistKind::Send { target, id, .. } if !self.gamma.contains(*id) => Some(BwdBlocker::Received {
                receiver: *target,
                id: *id,
            }),
            HistKind::Spawn { child } => match self.procs.get(child) {
                Some(c) if c.hist.is_empty() => None,
                Some(_) => Some(BwdBlocker::ChildActive(*child)),
                None => Some(BwdBlocker::ChildMissing(*child)),
            },
            _ => None,
        }
    }

    /// The backward step available to `pid`, if any. The history head fixes it.
    pub fn bwd_enabled_for(&self, pid: Pid) -> Option<RevEnabled> {
        let p = self.procs.get(&pid)?;
        let head = p.head()?;
        if self.bwd_blocker(pid).is_some() {
            return None;
        }
        let action = head.action();
        let sat = SatisfiedSet::of(action);
        let sat = match &head.kind {
            HistKind::Seq { .. } | HistKind::Rec { .. } => sat.with_vars(introduced(&head.config, &p.config)),
            _ => sat,
        };
        Some(RevEnabled { pid, action, sat })
    }

    pub fn bwd_enabled(&self) -> Vec<RevEnabled> {
        self.procs.keys().filter_map(|p| self.bwd_enabled_for(*p)).collect()
    }

    /// Undo the last step of `pid`.
    pub fn bwd_step(&mut self, pid: Pid) -> Result<RevEnabled, RevError> {
        let p = self.procs.get(&pid).ok_or(RevError::UnknownPid(pid))?;
        let Some(enabled) = self.bwd_enabled_for(pid) else {
            let reason = match self.bwd_blocker(pid) {
                Some(b) => b.to_string(),
                None if p.hist.is_empty() => "empty history".to_string(),
                None => "not enabled".to_string(),
            };
            return Err(RevError::NotEnabled {
                pid,
                dir: Direction::Backward,
                reason,
            });
        };
        let p = self.procs.get_mut(&pid).expect("present");
        let item = p.hist.pop().expect("nonempty history");
        p.config = item.config.clone();
        match &item.kind {
            HistKind::Seq { out } => {
                if let Some(n) = out {
                    p.output.truncate(*n);
                }
            }
            HistKind::SelfPid => {}
            HistKind::Send { id, .. } => {
                self.gamma.remove(*id);
                self.log.push_front(pid, crate::system::LogEvent::Send(*id));
            }
            HistKind::Rec { sender, value, id } => {
                self.gamma.insert(TaggedMsg {
                    sender: *sender,
                    target: pid,
                    value: value.clone(),
                    id: *id,
                });
                self.log.push_front(pid, crate::system::LogEvent::Rec(*id));
            }
            HistKind::Spawn { child } => {
                self.procs.remove(child);
                self.log.push_front(pid, crate::system::LogEvent::Spawn(*child));
            }
        }
        Ok(enabled)
    }

    /// No forward step is possible and the log has been consumed.
    pub fn replay_complete(&self) -> bool {
        self.log.is_empty() && self.fwd_enabled().is_empty()
    }
}

/// Variables bound by a step from `before` to `after`. A step that returns
/// from a function call restores the caller's bindings and introduces none.
fn introduced(before: &Config, after: &Config) -> Vec<Var> {
    if after.stack.depth() < before.stack.depth() {
        return Vec::new();
    }
    after.env.domain_minus(&before.env)
}

fn kind_name(kind: &str) -> &'static str {
    match kind {
        "send" => "send",
        "rec" => "rec",
        "spawn" => "spawn",
        "self" => "self",
        _ => "seq",
    }
}

/// Why a backward step is blocked by another process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BwdBlocker {
    /// The message was already received, by `receiver`.
    #[error("message {id} has been received by {receiver}")]
    Received { receiver: Pid, id: MsgId },
    #[error("spawned process {0} has a nonempty history")]
    ChildActive(Pid),
    #[error("spawned process {0} no longer exists")]
    ChildMissing(Pid),
}
