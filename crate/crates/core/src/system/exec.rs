//! A single process step at the system level, shared by the standard and
//! reversible semantics.

use super::{Action, Allocators, Mailbox, MsgId, TaggedMsg};
use crate::eval::{matching, peek_step, pending_receive, resolve_future, step_expr, Config, Label, StepError, StepKind};
use crate::syntax::{Expr, FutureId, Pid, Program, Value};

/// How a step changes the rest of the system.
#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    None,
    /// Add the message to Γ.
    Sent(TaggedMsg),
    /// Remove the message from Γ.
    Received(TaggedMsg),
    /// Add a new process.
    Spawned { child: Pid, config: Config },
}

#[derive(Clone, Debug)]
pub struct Performed {
    pub config: Config,
    pub action: Action,
    pub output: Option<String>,
    pub effect: Effect,
}

/// Why a process step could not happen.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Refusal {
    #[error("process has terminated")]
    Final,
    #[error("{0}")]
    Stuck(String),
    #[error("no message matches the receive")]
    NoMessage,
    #[error("next step is a {actual}, not {wanted}")]
    Mismatch { wanted: Action, actual: &'static str },
    #[error("message {0} is not in the mailbox of this process")]
    Unavailable(MsgId),
    #[error("message {0} does not match any receive clause")]
    Rejected(MsgId),
    #[error("name in {0} is already in use")]
    NameTaken(Action),
}

/// Perform the next step of process `pid`.
///
/// With `forced == None` sends and spawns use fresh names and a receive takes
/// the matching message with the lowest label. Otherwise the step must have
/// the given action, and uses the names in it.
pub fn perform(
    program: &Program,
    pid: Pid,
    cfg: &Config,
    gamma: &Mailbox,
    alloc: &mut Allocators,
    forced: Option<Action>,
    pid_in_use: impl Fn(Pid) -> bool,
) -> Result<Performed, Refusal> {
    let future = FutureId(alloc.next_future);
    let step = match step_expr(program, cfg, future) {
        Ok(s) => s,
        Err(StepError::Normal) => return Err(Refusal::Final),
        Err(e @ StepError::Stuck { .. }) => return Err(Refusal::Stuck(e.to_string())),
    };
    let kind = kind_name(step.label.step_kind());
    if let Some(a) = forced {
        if a.kind() != kind {
            return Err(Refusal::Mismatch { wanted: a, actual: kind });
        }
    }
    if !step.label.is_tau() {
        alloc.next_future += 1;
    }
    let mut config = step.config;
    let (action, effect) = match step.label {
        Label::Tau => (Action::Seq, Effect::None),
        Label::SelfPid { future } => {
            config.expr = resolve_future(&config.expr, future, Expr::value(Value::Pid(pid), config.expr.pos));
            (Action::SelfPid, Effect::None)
        }
        Label::Send { to, msg } => {
            let Value::Pid(target) = to else {
                return Err(Refusal::Stuck(format!("bad destination {to}")));
            };
            let id = match forced {
                Some(Action::Send(l)) => {
                    if gamma.contains(l) {
                        return Err(Refusal::NameTaken(Action::Send(l)));
                    }
                    alloc.reserve(None, Some(l));
                    l
                }
                _ => {
                    let l = MsgId(alloc.next_msg);
                    alloc.next_msg += 1;
                    l
                }
            };
            let m = TaggedMsg {
                sender: pid,
                target,
                value: msg,
                id,
            };
            (Action::Send(id), Effect::Sent(m))
        }
        Label::Spawn { future, target } => {
            let child = match forced {
                Some(Action::Spawn(p)) => {
                    if pid_in_use(p) {
                        return Err(Refusal::NameTaken(Action::Spawn(p)));
                    }
                    alloc.reserve(Some(p), None);
                    p
                }
                _ => {
                    let p = Pid(alloc.next_pid);
                    alloc.next_pid += 1;
                    p
                }
            };
            let pos = config.expr.pos;
            config.expr = resolve_future(&config.expr, future, Expr::value(Value::Pid(child), pos));
            let child_cfg = target.initial_config(pos);
            (Action::Spawn(child), Effect::Spawned { child, config: child_cfg })
        }
        Label::Receive { future, clauses } => {
            let matches = |m: &TaggedMsg| {
                matching::match_clauses(matching::ClauseMode::Case, &clauses, &config.env, std::slice::from_ref(&m.value))
                    .map(|sel| (sel.env, sel.body.clone()))
            };
            let (m, (env, body)) = match forced {
                Some(Action::Rec(l)) => {
                    let m = gamma
                        .get(l)
                        .filter(|m| m.target == pid)
                        .ok_or(Refusal::Unavailable(l))?;
                    (m, matches(m).ok_or(Refusal::Rejected(l))?)
                }
                _ => gamma
                    .addressed_to(pid)
                    .find_map(|m| matches(m).map(|r| (m, r)))
                    .ok_or(Refusal::NoMessage)?,
            };
            config.env = env;
            config.expr = resolve_future(&config.expr, future, body);
            (Action::Rec(m.id), Effect::Received(m.clone()))
        }
    };
    Ok(Performed {
        config,
        action,
        output: step.output,
        effect,
    })
}

/// Messages in Γ that the receive at the head of `cfg` would accept.
pub fn acceptable(pid: Pid, cfg: &Config, gamma: &Mailbox) -> Vec<MsgId> {
    let Some(clauses) = pending_receive(cfg) else {
        return Vec::new();
    };
    gamma
        .addressed_to(pid)
        .filter(|m| {
            matching::match_clauses(matching::ClauseMode::Case, clauses, &cfg.env, std::slice::from_ref(&m.value))
            .is_some()
        })
        .map(|m| m.id)
        .collect()
}

/// The kind of the next step (`"seq"`, `"send"`, `"rec"`, `"spawn"` or
/// `"self"`) without performing it.
pub fn next_kind(program: &Program, cfg: &Config) -> Result<&'static str, Refusal> {
    match peek_step(program, cfg) {
        Ok(k) => Ok(kind_name(k)),
        Err(StepError::Normal) => Err(Refusal::Final),
        Err(e) => Err(Refusal::Stuck(e.to_string())),
    }
}

fn kind_name(k: StepKind) -> &'static str {
    match k {
        StepKind::Tau => "seq",
        StepKind::Send => "send",
        StepKind::Receive => "rec",
        StepKind::Spawn => "spawn",
        StepKind::SelfPid => "self",
    }
}
