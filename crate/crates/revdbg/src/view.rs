//! Serializable snapshots of a session for front ends.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use revdbg_core::eval::{split, Config};
use revdbg_core::reversible::{HistKind, HistoryItem, RevProcess, RevSystem};
use revdbg_core::syntax::{pretty_expr, Pid};
use revdbg_core::system::{next_kind, LogEvent, Refusal};

use crate::session::Session;

/// Bumped whenever the serialized shape of a view changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub schema: u32,
    pub session: u64,
    pub mode: String,
    pub origin: String,
    pub entry: String,
    /// Result of the last command that ran the controller or the replay.
    pub outcome: Option<String>,
    pub processes: Vec<ProcessView>,
    pub mailbox: Vec<MessageView>,
    /// Pending requests, top first.
    pub requests: Vec<String>,
    pub trace_len: usize,
    pub has_log: bool,
    pub undo_depth: usize,
    pub redo_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub var: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessView {
    pub pid: Pid,
    pub status: String,
    /// Position of the next redex.
    pub highlight: Position,
    pub expr: String,
    pub env: Vec<Binding>,
    pub stack_depth: usize,
    /// Newest first.
    pub history: Vec<HistoryEntry>,
    /// Remaining log events, next first.
    pub log: Vec<LogEntry>,
    pub output: String,
    /// Commands for the per-process step and back controls.
    pub step_command: String,
    pub back_command: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    /// Target of a send, sender of a receive, child of a spawn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peer: Option<Pid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// Rolls back to just before this item.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roll_command: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub event: String,
    pub replay_command: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageView {
    pub id: u64,
    pub sender: Pid,
    pub target: Pid,
    pub value: String,
    pub roll_command: String,
}

/// The stored configuration of one history item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryDetail {
    pub pid: Pid,
    pub index: usize,
    pub kind: String,
    pub highlight: Position,
    pub expr: String,
    pub env: Vec<Binding>,
    pub stack_depth: usize,
}

fn highlight(cfg: &Config) -> Position {
    let (_, redex) = split(&cfg.expr);
    Position {
        line: redex.pos.line,
        col: redex.pos.col,
    }
}

fn bindings(cfg: &Config) -> Vec<Binding> {
    cfg.env
        .iter()
        .map(|(x, v)| Binding {
            var: x.to_string(),
            value: v.to_string(),
        })
        .collect()
}

fn status(sys: &RevSystem, p: &RevProcess) -> String {
    if !sys.fwd_enabled_for(p.pid).is_empty() {
        return "runnable".into();
    }
    if let Some(v) = p.config.result() {
        return format!("terminated: {v}");
    }
    match next_kind(&sys.program, &p.config) {
        Ok("rec") => "waiting".into(),
        Ok(kind) => format!("blocked on logged {kind}"),
        Err(Refusal::Stuck(r)) => format!("stuck: {r}"),
        Err(_) => "stuck".into(),
    }
}

fn entry(pid: Pid, h: &HistoryItem) -> HistoryEntry {
    let (id, peer, value, roll) = match &h.kind {
        HistKind::Seq { .. } | HistKind::SelfPid => (None, None, None, None),
        HistKind::Send { target, value, id } => (
            Some(id.0),
            Some(*target),
            Some(value.to_string()),
            Some(format!("roll-send {pid} {id}")),
        ),
        HistKind::Rec { sender, value, id } => (
            Some(id.0),
            Some(*sender),
            Some(value.to_string()),
            Some(format!("roll-rec {pid} {id}")),
        ),
        HistKind::Spawn { child } => (None, Some(*child), None, Some(format!("roll-spawn {pid} {child}"))),
    };
    HistoryEntry {
        kind: h.action().kind().to_string(),
        id,
        peer,
        value,
        roll_command: roll,
    }
}

fn log_entry(pid: Pid, e: &LogEvent) -> LogEntry {
    let replay_command = match e {
        LogEvent::Spawn(c) => format!("replay-spawn {pid} {c}"),
        LogEvent::Send(l) => format!("replay-send {pid} {l}"),
        LogEvent::Rec(l) => format!("replay-rec {pid} {l}"),
    };
    LogEntry {
        event: e.to_string(),
        replay_command,
    }
}

impl ProcessView {
    pub fn of(sys: &RevSystem, p: &RevProcess) -> Self {
        ProcessView {
            pid: p.pid,
            status: status(sys, p),
            highlight: highlight(&p.config),
            expr: pretty_expr(&p.config.expr),
            env: bindings(&p.config),
            stack_depth: p.config.stack.depth(),
            history: p.history().map(|h| entry(p.pid, h)).collect(),
            log: sys.log.events(p.pid).map(|e| log_entry(p.pid, e)).collect(),
            output: p.output.clone(),
            step_command: format!("step {} 1", p.pid),
            back_command: (p.history_len() > 0).then(|| format!("back {} 1", p.pid)),
        }
    }
}

impl HistoryDetail {
    pub fn of(pid: Pid, index: usize, h: &HistoryItem) -> Self {
        HistoryDetail {
            pid,
            index,
            kind: h.action().to_string(),
            highlight: highlight(&h.config),
            expr: pretty_expr(&h.config.expr),
            env: bindings(&h.config),
            stack_depth: h.config.stack.depth(),
        }
    }
}

impl StateView {
    pub fn of(s: &Session) -> Self {
        let cs = s.state();
        let sys = &cs.system;
        StateView {
            schema: SCHEMA_VERSION,
            session: s.id,
            mode: s.mode().name().to_string(),
            origin: sys.origin.clone(),
            entry: s.entry.clone(),
            outcome: s.outcome().map(|o| o.to_string()),
            processes: sys.procs.values().map(|p| ProcessView::of(sys, p)).collect(),
            mailbox: sys
                .gamma
                .iter()
                .map(|m| MessageView {
                    id: m.id.0,
                    sender: m.sender,
                    target: m.target,
                    value: m.value.to_string(),
                    roll_command: format!("roll-send {} {}", m.sender, m.id),
                })
                .collect(),
            requests: cs.stack().map(|r| r.to_string()).collect(),
            trace_len: cs.trace.len(),
            has_log: s.log().is_some(),
            undo_depth: s.undo_depth(),
            redo_depth: s.redo_depth(),
        }
    }

    pub fn process(&self, pid: Pid) -> Option<&ProcessView> {
        self.processes.iter().find(|p| p.pid == pid)
    }

    /// Plain-text rendering for the terminal.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "[{} mode", self.mode);
        if let Some(o) = &self.outcome {
            let _ = write!(out, ", {o}");
        }
        let _ = writeln!(out, ", {} steps]", self.trace_len);
        for p in &self.processes {
            let _ = writeln!(out, "{} {} at {}:{}", p.pid, p.status, p.highlight.line, p.highlight.col);
            let _ = writeln!(out, "  expr:    {}", p.expr);
            if !p.env.is_empty() {
                let env: Vec<String> = p.env.iter().map(|b| format!("{} = {}", b.var, b.value)).collect();
                let _ = writeln!(out, "  env:     {}", env.join(", "));
            }
            if p.stack_depth > 0 {
                let _ = writeln!(out, "  stack:   {} frames", p.stack_depth);
            }
            if !p.history.is_empty() {
                let h: Vec<String> = p
                    .history
                    .iter()
                    .map(|h| match (h.id, h.peer) {
                        (Some(id), _) => format!("{}({id})", h.kind),
                        (None, Some(c)) => format!("{}({c})", h.kind),
                        _ => h.kind.clone(),
                    })
                    .collect();
                let _ = writeln!(out, "  history: {}", h.join(" "));
            }
            if !p.log.is_empty() {
                let l: Vec<&str> = p.log.iter().map(|e| e.event.as_str()).collect();
                let _ = writeln!(out, "  log:     {}", l.join(" "));
            }
            if !p.output.is_empty() {
                let _ = writeln!(out, "  output:  {}", p.output.trim_end().replace('\n', "\n           "));
            }
        }
        if !self.mailbox.is_empty() {
            let _ = writeln!(out, "mailbox:");
            for m in &self.mailbox {
                let _ = writeln!(out, "  {}: {} -> {} {}", m.id, m.sender, m.target, m.value);
            }
        }
        if !self.requests.is_empty() {
            let _ = writeln!(out, "requests: {}", self.requests.join(" "));
        }
        out
    }
}
