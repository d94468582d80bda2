//! Debugging sessions: a controlled state, its mode and settings, and an
//! undo/redo ring of whole-state snapshots.
//!
//! The ring is a convenience for the user interface. `undo` puts back the
//! previous state wholesale, including the log and the request stack; it is
//! not a backward step of the semantics and does not respect causality. Use
//! `back` and the `roll-*` requests for causal-consistent rollback.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use revdbg_core::causality::{decode_log, CausalityError};
use revdbg_core::controller::{parse_requests, ControlledState, Outcome, RequestError, TraceStep, DEFAULT_FUEL};
use revdbg_core::reversible::{to_reversible, Direction, RevError};
use revdbg_core::syntax::{parse_program, ParseError, Pid, Program};
use revdbg_core::system::{
    run_trace, Action, Policy, Scheduler, StdSystem, SystemError, SystemLog, TraceError, DEFAULT_MAX_STEPS,
};

use crate::view::{HistoryDetail, StateView};

pub const UNDO_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settings {
    pub seed: u64,
    pub policy: Policy,
    pub fuel: usize,
    pub max_steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 0,
            policy: Policy::RoundRobin,
            fuel: DEFAULT_FUEL,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    UserDriven,
    Replay,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::UserDriven => "user-driven",
            Mode::Replay => "replay",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Log(#[from] CausalityError),
    #[error(transparent)]
    Reversible(#[from] RevError),
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("trace did not terminate within {0} steps")]
    TraceLimit(usize),
    #[error("no log: run `trace` first or open the session with a log")]
    NoLog,
    #[error("nothing to {0}")]
    NothingTo(&'static str),
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("{0}")]
    Usage(String),
}

impl SessionError {
    /// Short machine-readable name used by the protocol.
    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::Parse(_) => "parse",
            SessionError::System(_) => "system",
            SessionError::Log(_) => "log",
            SessionError::Reversible(_) => "reversible",
            SessionError::Request(_) => "request",
            SessionError::Infeasible(_) => "infeasible",
            SessionError::TraceLimit(_) => "trace-limit",
            SessionError::NoLog => "no-log",
            SessionError::NothingTo(_) => "nothing-to-do",
            SessionError::UnknownSession(_) => "unknown-session",
            SessionError::Usage(_) => "usage",
        }
    }
}

/// A session command in text form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    /// A controller request line such as `roll-send <0.1.0> 3`.
    Requests(String),
    /// Run the program to completion under the scheduler and keep its log.
    Trace { seed: Option<u64> },
    /// Restart in replay mode from the kept log and replay all of it.
    Replay,
    /// Restart from the initial system, in replay mode when a log is kept
    /// and `with_log` is set.
    Restart { with_log: bool },
    /// Forward steps of every runnable process, at most `n` in total.
    Run { n: Option<usize> },
    Undo,
    Redo,
}

impl Command {
    pub fn parse(line: &str) -> Result<Command, SessionError> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let num = |w: Option<&&str>| -> Result<Option<u64>, SessionError> {
            w.map(|t| t.parse().map_err(|_| SessionError::Usage(format!("bad number {t:?}"))))
                .transpose()
        };
        Ok(match words.as_slice() {
            ["trace", rest @ ..] if rest.len() <= 1 => Command::Trace { seed: num(rest.first())? },
            ["replay"] => Command::Replay,
            ["restart"] => Command::Restart { with_log: false },
            ["restart", "--log"] => Command::Restart { with_log: true },
            ["run", rest @ ..] if rest.len() <= 1 => Command::Run {
                n: num(rest.first())?.map(|n| n as usize),
            },
            ["undo"] => Command::Undo,
            ["redo"] => Command::Redo,
            ["trace" | "replay" | "restart" | "run" | "undo" | "redo", ..] => {
                return Err(SessionError::Usage(format!("bad arguments in {line:?}")))
            }
            _ => Command::Requests(line.trim().to_string()),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Requests(r) => f.write_str(r),
            Command::Trace { seed: None } => f.write_str("trace"),
            Command::Trace { seed: Some(s) } => write!(f, "trace {s}"),
            Command::Replay => f.write_str("replay"),
            Command::Restart { with_log: false } => f.write_str("restart"),
            Command::Restart { with_log: true } => f.write_str("restart --log"),
            Command::Run { n: None } => f.write_str("run"),
            Command::Run { n: Some(n) } => write!(f, "run {n}"),
            Command::Undo => f.write_str("undo"),
            Command::Redo => f.write_str("redo"),
        }
    }
}

/// Everything a command can change.
#[derive(Clone, Debug)]
pub(crate) struct Snapshot {
    pub state: ControlledState,
    pub mode: Mode,
    pub log: Option<SystemLog>,
    pub outcome: Option<Outcome>,
}

#[derive(Debug)]
pub struct Session {
    pub id: u64,
    pub source: String,
    pub entry: String,
    pub program: Arc<Program>,
    pub settings: Settings,
    pub(crate) current: Snapshot,
    undo: VecDeque<Snapshot>,
    redo: Vec<Snapshot>,
}

impl Session {
    /// Parse `source`, resolve `entry` and start in replay mode when a log
    /// is given, user-driven mode otherwise.
    pub fn create(id: u64, source: &str, entry: &str, log: Option<&str>, settings: Settings) -> Result<Self, SessionError> {
        let program = Arc::new(parse_program(source)?);
        let log = log.map(decode_log).transpose()?;
        let entry = entry.trim().to_string();
        let current = fresh(&program, &entry, log)?;
        Ok(Session {
            id,
            source: source.to_string(),
            entry,
            program,
            settings,
            current,
            undo: VecDeque::new(),
            redo: Vec::new(),
        })
    }

    fn initial(&self) -> Result<StdSystem, SessionError> {
        Ok(StdSystem::init(self.program.clone(), &self.entry)?)
    }

    fn fresh(&self, log: Option<SystemLog>) -> Result<Snapshot, SessionError> {
        fresh(&self.program, &self.entry, log)
    }

    pub fn state(&self) -> &ControlledState {
        &self.current.state
    }

    pub fn mode(&self) -> Mode {
        self.current.mode
    }

    /// The log kept by the session: the one it was opened with or the one
    /// produced by the last `trace`.
    pub fn log(&self) -> Option<&SystemLog> {
        self.current.log.as_ref()
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.current.outcome.as_ref()
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn redo_depth(&self) -> usize {
        self.redo.len()
    }

    pub fn snapshot(&self) -> StateView {
        StateView::of(self)
    }

    /// The stored configuration of history item `index` (0 is the newest).
    pub fn inspect(&self, pid: Pid, index: usize) -> Result<HistoryDetail, SessionError> {
        let p = self
            .state()
            .system
            .process(pid)
            .ok_or_else(|| SessionError::Infeasible(format!("no process {pid}")))?;
        let item = p
            .history()
            .nth(index)
            .ok_or_else(|| SessionError::Usage(format!("{pid} has {} history items", p.history_len())))?;
        Ok(HistoryDetail::of(pid, index, item))
    }

    /// Apply a command. On error the session is left exactly as it was.
    pub fn apply(&mut self, cmd: &Command) -> Result<StateView, SessionError> {
        match cmd {
            Command::Undo => {
                let prev = self.undo.pop_back().ok_or(SessionError::NothingTo("undo"))?;
                let cur = std::mem::replace(&mut self.current, prev);
                self.redo.push(cur);
            }
            Command::Redo => {
                let next = self.redo.pop().ok_or(SessionError::NothingTo("redo"))?;
                let cur = std::mem::replace(&mut self.current, next);
                self.push_undo(cur);
            }
            _ => {
                let next = self.execute(cmd)?;
                let cur = std::mem::replace(&mut self.current, next);
                self.push_undo(cur);
                self.redo.clear();
            }
        }
        Ok(self.snapshot())
    }

    pub fn apply_line(&mut self, line: &str) -> Result<StateView, SessionError> {
        let cmd = Command::parse(line)?;
        self.apply(&cmd)
    }

    fn push_undo(&mut self, snap: Snapshot) {
        if self.undo.len() == UNDO_DEPTH {
            self.undo.pop_front();
        }
        self.undo.push_back(snap);
    }

    /// Compute the state after `cmd` without touching the current one.
    fn execute(&self, cmd: &Command) -> Result<Snapshot, SessionError> {
        match cmd {
            Command::Requests(line) => {
                let reqs = parse_requests(line)?;
                let mut next = self.current.clone();
                let cs = &mut next.state;
                cs.check_feasible(&reqs[0]).map_err(SessionError::Infeasible)?;
                cs.clear_requests();
                cs.push_requests(reqs);
                let outcome = cs.run_controlled(self.settings.fuel);
                if outcome != Outcome::Done {
                    cs.clear_requests();
                }
                next.outcome = Some(outcome);
                Ok(next)
            }
            Command::Trace { seed } => {
                let mut sched = Scheduler::new(self.settings.policy, seed.unwrap_or(self.settings.seed));
                let t = match run_trace(self.initial()?, &mut sched, self.settings.max_steps) {
                    Ok(t) => t,
                    Err(TraceError::StepLimitExceeded { limit, .. }) => return Err(SessionError::TraceLimit(limit)),
                };
                let mut next = self.current.clone();
                next.log = Some(t.log());
                next.outcome = None;
                Ok(next)
            }
            Command::Replay => {
                let log = self.current.log.clone().ok_or(SessionError::NoLog)?;
                let mut next = self.fresh(Some(log))?;
                next.outcome = Some(run_forward(&mut next.state, self.settings.fuel));
                Ok(next)
            }
            Command::Restart { with_log } => {
                let log = if *with_log {
                    Some(self.current.log.clone().ok_or(SessionError::NoLog)?)
                } else {
                    None
                };
                let mut next = self.fresh(log)?;
                next.log = next.log.or_else(|| self.current.log.clone());
                Ok(next)
            }
            Command::Run { n } => {
                let mut next = self.current.clone();
                let fuel = n.unwrap_or(self.settings.fuel);
                next.outcome = Some(run_forward(&mut next.state, fuel));
                Ok(next)
            }
            Command::Undo | Command::Redo => unreachable!("handled by apply"),
        }
    }
}

fn fresh(program: &Arc<Program>, entry: &str, log: Option<SystemLog>) -> Result<Snapshot, SessionError> {
    let mode = if log.is_some() { Mode::Replay } else { Mode::UserDriven };
    let system = to_reversible(StdSystem::init(program.clone(), entry)?, log.clone())?;
    Ok(Snapshot {
        state: ControlledState::new(system),
        mode,
        log,
        outcome: None,
    })
}

/// Forward steps, cycling over processes in pid order, until nothing is
/// enabled or `fuel` steps have been taken.
pub fn run_forward(cs: &mut ControlledState, fuel: usize) -> Outcome {
    let mut last: Option<Pid> = None;
    for _ in 0..fuel {
        let enabled = cs.system.fwd_enabled();
        if enabled.is_empty() {
            return Outcome::Done;
        }
        let e = enabled
            .iter()
            .find(|e| last.is_none_or(|l| e.pid > l))
            .unwrap_or(&enabled[0]);
        let pick = match e.action {
            Action::Rec(l) => Some(l),
            _ => None,
        };
        let pid = e.pid;
        match cs.system.fwd_step(pid, pick) {
            Ok(done) => cs.trace.push(TraceStep {
                pid,
                action: done.action,
                dir: Direction::Forward,
            }),
            Err(err) => return Outcome::Blocked(err.to_string()),
        }
        last = Some(pid);
    }
    if cs.system.fwd_enabled().is_empty() {
        Outcome::Done
    } else {
        Outcome::FuelExhausted
    }
}
