//! Line-oriented JSON files for logs and derivations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{validate, CausalityError};
use crate::syntax::Pid;
use crate::system::{Action, Derivation, LogEvent, MsgId, SystemLog};

#[derive(Serialize, Deserialize)]
#[serde(tag = "k", rename_all = "lowercase", deny_unknown_fields)]
enum EventRepr {
    Spawn { pid: Pid },
    Send { id: MsgId },
    Rec { id: MsgId },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogLine {
    pid: Pid,
    events: Vec<EventRepr>,
}

impl From<LogEvent> for EventRepr {
    fn from(e: LogEvent) -> Self {
        match e {
            LogEvent::Spawn(pid) => EventRepr::Spawn { pid },
            LogEvent::Send(id) => EventRepr::Send { id },
            LogEvent::Rec(id) => EventRepr::Rec { id },
        }
    }
}

impl From<EventRepr> for LogEvent {
    fn from(e: EventRepr) -> Self {
        match e {
            EventRepr::Spawn { pid } => LogEvent::Spawn(pid),
            EventRepr::Send { id } => LogEvent::Send(id),
            EventRepr::Rec { id } => LogEvent::Rec(id),
        }
    }
}

fn malformed(line: usize, message: impl Into<String>) -> CausalityError {
    CausalityError::MalformedLog {
        line: Some(line),
        message: message.into(),
    }
}

/// One line per process, pids ascending.
pub fn encode_log(w: &SystemLog) -> String {
    let mut out = String::new();
    for (pid, q) in w.iter() {
        let line = LogLine {
            pid,
            events: q.iter().copied().map(EventRepr::from).collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("log lines serialize"));
        out.push('\n');
    }
    out
}

/// Parse and validate a log. Blank lines are ignored.
pub fn decode_log(text: &str) -> Result<SystemLog, CausalityError> {
    let mut w = SystemLog::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: LogLine = serde_json::from_str(raw).map_err(|e| malformed(n, e.to_string()))?;
        if !seen.insert(line.pid) {
            return Err(malformed(n, format!("second line for {}", line.pid)));
        }
        for e in line.events {
            w.push_back(line.pid, e.into());
        }
    }
    w.validate(|_| false).map_err(|message| CausalityError::MalformedLog { line: None, message })?;
    Ok(w)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    origin: String,
    steps: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "k", rename_all = "lowercase")]
enum ActionRepr {
    Seq,
    Send { id: MsgId },
    Rec { id: MsgId },
    Spawn { child: Pid },
    #[serde(rename = "self")]
    SelfPid,
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    pid: Pid,
    #[serde(flatten)]
    action: ActionRepr,
}

/// A header line with the origin and length, then one line per transition.
pub fn encode_derivation(d: &Derivation) -> String {
    let mut out = serde_json::to_string(&Header {
        origin: d.origin.clone(),
        steps: d.len(),
    })
    .expect("header serializes");
    out.push('\n');
    for t in &d.steps {
        let action = match t.action {
            Action::Seq => ActionRepr::Seq,
            Action::Send(id) => ActionRepr::Send { id },
            Action::Rec(id) => ActionRepr::Rec { id },
            Action::Spawn(child) => ActionRepr::Spawn { child },
            Action::SelfPid => ActionRepr::SelfPid,
        };
        out.push_str(&serde_json::to_string(&StepLine { pid: t.pid, action }).expect("steps serialize"));
        out.push('\n');
    }
    out
}

pub fn decode_derivation(text: &str) -> Result<Derivation, CausalityError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
    let header: Header = serde_json::from_str(first).map_err(|e| malformed(1, e.to_string()))?;
    let mut d = Derivation::new(header.origin);
    for (i, raw) in lines {
        let s: StepLine = serde_json::from_str(raw).map_err(|e| malformed(i + 1, e.to_string()))?;
        let action = match s.action {
            ActionRepr::Seq => Action::Seq,
            ActionRepr::Send { id } => Action::Send(id),
            ActionRepr::Rec { id } => Action::Rec(id),
            ActionRepr::Spawn { child } => Action::Spawn(child),
            ActionRepr::SelfPid => Action::SelfPid,
        };
        d.push(s.pid, action);
    }
    if d.len() != header.steps {
        return Err(CausalityError::MalformedLog {
            line: None,
            message: format!("header announces {} steps, found {}", header.steps, d.len()),
        });
    }
    validate(&d)?;
    Ok(d)
}

/// Pairs of messages between the same two processes that were received in
/// a different order than they were sent.
pub fn fifo_warnings(d: &Derivation) -> Vec<String> {
    let mut sender = BTreeMap::new();
    let mut sent_at = BTreeMap::new();
    for (i, t) in d.steps.iter().enumerate() {
        if let Action::Send(l) = t.action {
            sender.insert(l, t.pid);
            sent_at.insert(l, i);
        }
    }
    let mut last: BTreeMap<(Pid, Pid), (MsgId, usize)> = BTreeMap::new();
    let mut out = Vec::new();
    for t in &d.steps {
        let Action::Rec(l) = t.action else { continue };
        let (Some(&from), Some(&at)) = (sender.get(&l), sent_at.get(&l)) else {
            continue;
        };
        let key = (from, t.pid);
        if let Some(&(prev, prev_at)) = last.get(&key) {
            if at < prev_at {
                out.push(format!(
                    "{} received message {l} from {from} after message {prev}, which was sent later",
                    t.pid
                ));
                continue;
            }
        }
        last.insert(key, (l, at));
    }
    out
}
