use std::collections::BTreeMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::exec::{acceptable, perform, Effect, Refusal};
use super::{Action, Allocators, Mailbox, MsgId, SystemError, Transition};
use crate::eval::{peek_step, Config, StepError, StepKind};
use crate::syntax::{parse_expr, pretty_program, Atom, Expr, ExprKind, Literal, Pid, Program, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct StdProcess {
    pub pid: Pid,
    pub config: Config,
    /// Everything this process printed.
    pub output: String,
}

/// A step the scheduler may take: process and predicted action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Enabled {
    pub pid: Pid,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProcStatus {
    Runnable,
    /// Waiting in a receive that no message in Γ satisfies.
    Waiting,
    Terminated(Value),
    Stuck(String),
}

impl ProcStatus {
    pub fn name(&self) -> &'static str {
        match self {
            ProcStatus::Runnable => "runnable",
            ProcStatus::Waiting => "waiting",
            ProcStatus::Terminated(_) => "terminated",
            ProcStatus::Stuck(_) => "stuck",
        }
    }
}

/// Status of a process with configuration `cfg` in mailbox `gamma`.
pub(crate) fn status_of(program: &Program, pid: Pid, cfg: &Config, gamma: &Mailbox) -> ProcStatus {
    match peek_step(program, cfg) {
        Err(StepError::Normal) => ProcStatus::Terminated(cfg.result().expect("final")),
        Err(e) => ProcStatus::Stuck(e.to_string()),
        Ok(StepKind::Receive) if acceptable(pid, cfg, gamma).is_empty() => ProcStatus::Waiting,
        Ok(_) => ProcStatus::Runnable,
    }
}

/// Predicted enabled actions of one process. A receive yields one entry per
/// acceptable message.
pub(crate) fn enabled_of(program: &Program, pid: Pid, cfg: &Config, gamma: &Mailbox, alloc: &Allocators) -> Vec<Enabled> {
    let Ok(kind) = peek_step(program, cfg) else {
        return Vec::new();
    };
    let one = |action| vec![Enabled { pid, action }];
    match kind {
        StepKind::Tau => one(Action::Seq),
        StepKind::SelfPid => one(Action::SelfPid),
        StepKind::Send => one(Action::Send(MsgId(alloc.next_msg))),
        StepKind::Spawn => one(Action::Spawn(Pid(alloc.next_pid))),
        StepKind::Receive => acceptable(pid, cfg, gamma)
            .into_iter()
            .map(|l| Enabled {
                pid,
                action: Action::Rec(l),
            })
            .collect(),
    }
}

/// Parse and resolve an entry point such as `main`, `main()` or
/// `fact:fact(5)` into the initial expression of the first process.
pub fn entry_expr(program: &Program, entry: &str) -> Result<Expr, SystemError> {
    let unknown = || SystemError::UnknownEntry(entry.to_string());
    let e = parse_expr(entry).map_err(|_| unknown())?;
    let (module, name, args) = match e.kind {
        ExprKind::Lit(Literal::Atom(a)) => (None, a, Vec::new()),
        ExprKind::Call {
            module, callee, args, ..
        } => {
            let ExprKind::Lit(Literal::Atom(a)) = callee.kind else {
                return Err(unknown());
            };
            let vals = args.iter().map(Expr::to_value).collect::<Option<Vec<_>>>().ok_or_else(unknown)?;
            (module, a, vals)
        }
        _ => return Err(unknown()),
    };
    let (m, f) = match &module {
        Some(m) => program
            .module(m.as_str())
            .and_then(|md| md.function(name.as_str(), args.len()).map(|f| (md, f))),
        None => program.lookup(None, name.as_str(), args.len()),
    }
    .ok_or_else(unknown)?;
    let home = Atom::new(m.name.as_str());
    let pos = f.pos;
    Ok(Expr::new(
        ExprKind::Call {
            module: Some(home.clone()),
            callee: Box::new(Expr::new(ExprKind::Lit(Literal::Atom(name)), pos)),
            args: args.into_iter().map(|v| Expr::value(v, pos)).collect(),
            home: Some(home),
        },
        pos,
    ))
}

/// Fingerprint identifying a program together with its entry point.
pub fn origin_of(program: &Program, entry: &str) -> String {
    let mut h = Sha256::new();
    h.update(pretty_program(program).as_bytes());
    h.update(b"\n");
    h.update(entry.trim().as_bytes());
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// A running system under the ordinary (tracing) semantics.
#[derive(Clone, Debug)]
pub struct StdSystem {
    pub program: Arc<Program>,
    pub gamma: Mailbox,
    pub procs: BTreeMap<Pid, StdProcess>,
    pub alloc: Allocators,
    /// Output of all processes, in the order it was printed.
    pub transcript: String,
    pub origin: String,
}

impl StdSystem {
    /// The initial system: one process `<0.0.0>` evaluating `entry`.
    pub fn init(program: Arc<Program>, entry: &str) -> Result<Self, SystemError> {
        let expr = entry_expr(&program, entry)?;
        let pid = Pid(0);
        let mut procs = BTreeMap::new();
        procs.insert(
            pid,
            StdProcess {
                pid,
                config: Config::new(expr),
                output: String::new(),
            },
        );
        Ok(StdSystem {
            origin: origin_of(&program, entry),
            program,
            gamma: Mailbox::new(),
            procs,
            alloc: Allocators {
                next_pid: 1,
                ..Allocators::default()
            },
            transcript: String::new(),
        })
    }

    pub fn process(&self, pid: Pid) -> Option<&StdProcess> {
        self.procs.get(&pid)
    }

    pub fn status(&self, pid: Pid) -> Option<ProcStatus> {
        let p = self.procs.get(&pid)?;
        Some(status_of(&self.program, pid, &p.config, &self.gamma))
    }

    /// All enabled steps, ordered by pid and then action.
    pub fn enabled(&self) -> Vec<Enabled> {
        self.procs
            .values()
            .flat_map(|p| enabled_of(&self.program, p.pid, &p.config, &self.gamma, &self.alloc))
            .collect()
    }

    /// No process can move.
    pub fn is_quiescent(&self) -> bool {
        self.enabled().is_empty()
    }

    /// Every process has reduced to a value.
    pub fn all_terminated(&self) -> bool {
        self.procs.values().all(|p| p.config.is_final())
    }

    /// Step process `pid`. `forced` fixes the action; otherwise fresh names
    /// are used and a receive takes its lowest-labelled acceptable message.
    pub fn step(&mut self, pid: Pid, forced: Option<Action>) -> Result<Transition, SystemError> {
        let p = self.procs.get(&pid).ok_or(SystemError::UnknownPid(pid))?;
        let procs = &self.procs;
        let done = perform(&self.program, pid, &p.config, &self.gamma, &mut self.alloc, forced, |q| {
            procs.contains_key(&q)
        })
        .map_err(|r| refusal(pid, forced, r))?;
        match done.effect {
            Effect::None => {}
            Effect::Sent(m) => self.gamma.insert(m),
            Effect::Received(m) => {
                self.gamma.remove(m.id);
            }
            Effect::Spawned { child, config } => {
                self.procs.insert(
                    child,
                    StdProcess {
                        pid: child,
                        config,
                        output: String::new(),
                    },
                );
            }
        }
        let p = self.procs.get_mut(&pid).expect("present");
        p.config = done.config;
        if let Some(o) = done.output {
            p.output.push_str(&o);
            self.transcript.push_str(&o);
        }
        Ok(Transition {
            pid,
            action: done.action,
        })
    }
}

pub(crate) fn refusal(pid: Pid, forced: Option<Action>, r: Refusal) -> SystemError {
    SystemError::NotEnabled {
        pid,
        what: forced.map_or_else(|| "a step".to_string(), |a| a.to_string()),
        reason: r.to_string(),
    }
}
