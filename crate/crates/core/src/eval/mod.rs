//! Labeled small-step semantics of expressions over (environment,
//! expression, stack) triples.

pub mod bif;
pub mod matching;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use bif::BifError;
pub use matching::{eval_guard, match_clauses, match_pattern, ClauseMode, Selected};

use crate::syntax::{
    Atom, Clause, Closure, Expr, ExprKind, FutureId, Literal, Op, Pos, Program, Value, Var,
};

/// A substitution θ from variables to values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Env(BTreeMap<Var, Value>);

impl Env {
    pub fn new() -> Self {
        Env(BTreeMap::new())
    }

    pub fn get(&self, x: &Var) -> Option<&Value> {
        self.0.get(x)
    }

    pub fn insert(&mut self, x: Var, v: Value) {
        self.0.insert(x, v);
    }

    pub fn contains(&self, x: &Var) -> bool {
        self.0.contains_key(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bindings in variable order.
    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.0.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.0.values()
    }

    /// θσ: the bindings of `self` updated with those of `other`.
    pub fn overlay(&self, other: &Env) -> Env {
        if other.is_empty() {
            return self.clone();
        }
        let mut out = self.clone();
        out.0.extend(other.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    pub fn restrict(&self, vars: &[Var]) -> Env {
        Env(vars
            .iter()
            .filter_map(|x| self.0.get(x).map(|v| (x.clone(), v.clone())))
            .collect())
    }

    /// Dom(self) \ Dom(other)
    pub fn domain_minus(&self, other: &Env) -> Vec<Var> {
        self.vars().filter(|x| !other.contains(x)).cloned().collect()
    }
}

impl FromIterator<(Var, Value)> for Env {
    fn from_iter<I: IntoIterator<Item = (Var, Value)>>(iter: I) -> Self {
        Env(iter.into_iter().collect())
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    /// `seq(C[_])`, pushed by `if`, `case` and `receive`.
    Seq(Expr),
    /// `(θ, C[_])`, pushed by function calls.
    Call(Env, Expr),
}

impl Frame {
    pub fn context(&self) -> &Expr {
        match self {
            Frame::Seq(c) | Frame::Call(_, c) => c,
        }
    }
}

#[derive(Debug)]
struct StackNode {
    frame: Frame,
    next: Stack,
    depth: usize,
}

/// Persistent stack: pushing and popping share the tail.
#[derive(Clone, Debug, Default)]
pub struct Stack(Option<Arc<StackNode>>);

impl Stack {
    pub fn new() -> Self {
        Stack(None)
    }

    pub fn push(&self, frame: Frame) -> Stack {
        Stack(Some(Arc::new(StackNode {
            frame,
            next: self.clone(),
            depth: self.depth() + 1,
        })))
    }

    pub fn pop(&self) -> Option<(&Frame, &Stack)> {
        self.0.as_ref().map(|n| (&n.frame, &n.next))
    }

    pub fn top(&self) -> Option<&Frame> {
        self.0.as_ref().map(|n| &n.frame)
    }

    pub fn depth(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.depth)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    /// Frames from the top down.
    pub fn iter(&self) -> impl Iterator<Item = &Frame> {
        let mut cur = self;
        std::iter::from_fn(move || {
            let (f, next) = cur.pop()?;
            cur = next;
            Some(f)
        })
    }
}

impl PartialEq for Stack {
    fn eq(&self, other: &Stack) -> bool {
        match (&self.0, &other.0) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                Arc::ptr_eq(a, b) || (a.depth == b.depth && a.frame == b.frame && a.next == b.next)
            }
            _ => false,
        }
    }
}

/// The (θ, e, S) triple of a process.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub env: Env,
    pub expr: Expr,
    pub stack: Stack,
}

impl Config {
    pub fn new(expr: Expr) -> Self {
        Config {
            env: Env::new(),
            expr,
            stack: Stack::new(),
        }
    }

    /// A value with an empty stack: nothing left to evaluate.
    pub fn is_final(&self) -> bool {
        self.stack.is_empty() && self.expr.is_value()
    }

    pub fn result(&self) -> Option<Value> {
        if self.stack.is_empty() {
            self.expr.to_value()
        } else {
            None
        }
    }
}

/// What a spawned process runs.
#[derive(Clone, Debug, PartialEq)]
pub enum SpawnTarget {
    /// `spawn(Mod, Fun, Args)` (or `spawn(Fun, Args)` resolved to its module).
    Call {
        module: Atom,
        function: Atom,
        args: Vec<Value>,
    },
    /// `spawn(fun() -> Body end)`.
    Closure(Arc<Closure>),
}

impl SpawnTarget {
    /// The initial configuration of the spawned process.
    pub fn initial_config(&self, pos: Pos) -> Config {
        match self {
            SpawnTarget::Call {
                module,
                function,
                args,
            } => Config::new(Expr::new(
                ExprKind::Call {
                    module: Some(module.clone()),
                    callee: Box::new(Expr::new(ExprKind::Lit(Literal::Atom(function.clone())), pos)),
                    args: args.iter().map(|v| Expr::value(v.clone(), pos)).collect(),
                    home: Some(module.clone()),
                },
                pos,
            )),
            SpawnTarget::Closure(c) => Config {
                env: c.env.clone(),
                expr: c.fun.clauses[0].body.clone(),
                stack: Stack::new(),
            },
        }
    }
}

/// Expression-level labels.
#[derive(Clone, Debug, PartialEq)]
pub enum Label {
    Tau,
    Send { to: Value, msg: Value },
    Receive { future: FutureId, clauses: Vec<Clause> },
    Spawn { future: FutureId, target: SpawnTarget },
    SelfPid { future: FutureId },
}

impl Label {
    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }
}

#[derive(Clone, Debug)]
pub struct ExprStep {
    pub config: Config,
    pub label: Label,
    /// Text printed by the step (`io:format`).
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("expression is fully evaluated")]
    Normal,
    #[error("{pos}: {reason} (evaluating {redex})")]
    Stuck {
        reason: String,
        pos: Pos,
        redex: String,
    },
}

// ---- evaluation contexts ----

/// The `i`th subexpression evaluated eagerly, in order.
fn slot(e: &Expr, i: usize) -> Option<&Expr> {
    match &e.kind {
        ExprKind::Tuple(es) | ExprKind::Spawn { args: es, .. } => es.get(i),
        ExprKind::Op(Op::AndAlso | Op::OrElse, args) | ExprKind::Seq(args) => args.get(i).filter(|_| i == 0),
        ExprKind::Op(_, args) => args.get(i),
        ExprKind::Cons(a, b) | ExprKind::Send(a, b) => [a, b].get(i).map(|x| &***x),
        ExprKind::Match(_, e) | ExprKind::Case(e, _) => (i == 0).then_some(&**e),
        ExprKind::Call { callee, args, .. } => match i {
            0 => Some(callee),
            _ => args.get(i - 1),
        },
        _ => None,
    }
}

fn slots(e: &Expr) -> impl Iterator<Item = &Expr> {
    (0..).map_while(move |i| slot(e, i))
}

fn slot_mut(e: &mut Expr, i: usize) -> &mut Expr {
    match &mut e.kind {
        ExprKind::Tuple(es) | ExprKind::Spawn { args: es, .. } | ExprKind::Op(_, es) | ExprKind::Seq(es) => {
            &mut es[i]
        }
        ExprKind::Cons(a, b) | ExprKind::Send(a, b) => {
            if i == 0 {
                a
            } else {
                b
            }
        }
        ExprKind::Match(_, e) | ExprKind::Case(e, _) => e,
        ExprKind::Call { callee, args, .. } => {
            if i == 0 {
                callee
            } else {
                &mut args[i - 1]
            }
        }
        _ => unreachable!("no slot {i}"),
    }
}

/// Path to the next redex under eager left-to-right evaluation.
fn redex_path(e: &Expr) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = e;
    while let Some((i, s)) = slots(cur).enumerate().find(|(_, s)| !s.is_value()) {
        path.push(i);
        cur = s;
    }
    path
}

fn at<'a>(e: &'a Expr, path: &[usize]) -> &'a Expr {
    path.iter().fold(e, |cur, &i| slot(cur, i).expect("path follows slots"))
}

fn replace_at(e: &mut Expr, path: &[usize], new: Expr) -> Expr {
    let target = path.iter().fold(e, |cur, &i| slot_mut(cur, i));
    std::mem::replace(target, new)
}

/// Split `e` into an evaluation context (with a hole) and its redex.
pub fn split(e: &Expr) -> (Expr, Expr) {
    let path = redex_path(e);
    let mut ctx = e.clone();
    let pos = at(e, &path).pos;
    let redex = replace_at(&mut ctx, &path, Expr::new(ExprKind::Hole, pos));
    (ctx, redex)
}

/// Fill the hole of an evaluation context.
pub fn plug(ctx: &Expr, filler: Expr) -> Expr {
    let mut out = ctx.clone();
    let mut filler = Some(filler);
    fill(&mut out, &mut |e: &mut Expr| {
        if matches!(e.kind, ExprKind::Hole) {
            *e = filler.take().expect("context has one hole");
            true
        } else {
            false
        }
    });
    out
}

/// Replace the pending future `k` by `filler`.
pub fn resolve_future(e: &Expr, k: FutureId, filler: Expr) -> Expr {
    let mut out = e.clone();
    let mut filler = Some(filler);
    fill(&mut out, &mut |e: &mut Expr| {
        if matches!(e.kind, ExprKind::Future(f) if f == k) {
            *e = filler.take().expect("future occurs once");
            true
        } else {
            false
        }
    });
    out
}

/// Visit eager positions depth-first until `f` reports it replaced a node.
fn fill(e: &mut Expr, f: &mut impl FnMut(&mut Expr) -> bool) -> bool {
    if f(e) {
        return true;
    }
    let n = slots(e).count();
    for i in 0..n {
        if fill(slot_mut(e, i), f) {
            return true;
        }
    }
    false
}

// ---- the step function ----

fn stuck(reason: impl Into<String>, redex: &Expr) -> StepError {
    StepError::Stuck {
        reason: reason.into(),
        pos: redex.pos,
        redex: redex.to_string(),
    }
}

fn values(es: &[Expr]) -> Vec<Value> {
    es.iter().map(|e| e.to_value().expect("argument is a value")).collect()
}

fn free_vars(f: &crate::syntax::FunExpr) -> Vec<Var> {
    let mut vs = Vec::new();
    for c in &f.clauses {
        c.patterns.iter().for_each(|p| p.vars(&mut vs));
        if let Some(g) = &c.guard {
            g.alternatives.iter().flatten().for_each(|e| e.collect_vars(&mut vs));
        }
        c.body.collect_vars(&mut vs);
    }
    vs.sort();
    vs.dedup();
    vs
}

/// Clauses of the receive about to be evaluated, if the next redex is one.
pub fn pending_receive(cfg: &Config) -> Option<&[Clause]> {
    if cfg.expr.is_value() {
        return None;
    }
    match &at(&cfg.expr, &redex_path(&cfg.expr)).kind {
        ExprKind::Receive(cls) => Some(cls),
        _ => None,
    }
}

/// Kind of the next step, as reported by [`peek_step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Tau,
    Send,
    Receive,
    Spawn,
    SelfPid,
}

impl Label {
    pub fn step_kind(&self) -> StepKind {
        match self {
            Label::Tau => StepKind::Tau,
            Label::Send { .. } => StepKind::Send,
            Label::Receive { .. } => StepKind::Receive,
            Label::Spawn { .. } => StepKind::Spawn,
            Label::SelfPid { .. } => StepKind::SelfPid,
        }
    }
}

/// What the redex reduces to, before the new configuration is assembled.
enum Reduction<'a> {
    /// Replace the redex in place, possibly extending the environment.
    Local {
        env: Option<Env>,
        new: Replacement<'a>,
        output: Option<String>,
    },
    /// Evaluate `body` under `env`, saving the context in a frame. Calls
    /// also save the caller's environment.
    Enter { env: Env, body: &'a Expr, call: bool },
    Receive(&'a [Clause]),
    Send { to: Value, msg: Value },
    SelfPid,
    Spawn(SpawnTarget),
}

enum Replacement<'a> {
    Owned(Expr),
    Borrowed(&'a Expr),
    Rest(&'a [Expr]),
}

impl Reduction<'_> {
    fn kind(&self) -> StepKind {
        match self {
            Reduction::Local { .. } | Reduction::Enter { .. } => StepKind::Tau,
            Reduction::Receive(_) => StepKind::Receive,
            Reduction::Send { .. } => StepKind::Send,
            Reduction::SelfPid => StepKind::SelfPid,
            Reduction::Spawn(_) => StepKind::Spawn,
        }
    }
}

fn local<'a>(new: Expr) -> Result<Reduction<'a>, StepError> {
    Ok(Reduction::Local {
        env: None,
        new: Replacement::Owned(new),
        output: None,
    })
}

fn reduce<'a>(program: &'a Program, env: &Env, redex: &'a Expr) -> Result<Reduction<'a>, StepError> {
    let pos = redex.pos;
    match &redex.kind {
        ExprKind::Var(x) => match env.get(x) {
            Some(v) => local(Expr::value(v.clone(), pos)),
            None => Err(stuck(format!("variable {x} is unbound"), redex)),
        },
        // Seq1
        ExprKind::Seq(es) => Ok(Reduction::Local {
            env: None,
            new: Replacement::Rest(&es[1..]),
            output: None,
        }),
        ExprKind::Match(p, rhs) => {
            let v = rhs.to_value().expect("value");
            match match_pattern(p, &v, env) {
                Some(sigma) => Ok(Reduction::Local {
                    env: Some(env.overlay(&sigma)),
                    new: Replacement::Owned(Expr::value(v, pos)),
                    output: None,
                }),
                None => Err(stuck(format!("no match of right hand side value {v}"), redex)),
            }
        }
        ExprKind::Op(op @ (Op::AndAlso | Op::OrElse), args) => {
            let short = matches!(op, Op::OrElse);
            match args[0].to_value().and_then(|v| v.as_bool()) {
                Some(b) if b == short => local(Expr::value(Value::bool(b), pos)),
                Some(_) => Ok(Reduction::Local {
                    env: None,
                    new: Replacement::Borrowed(&args[1]),
                    output: None,
                }),
                None => Err(stuck(format!("bad argument in {}", op.symbol()), redex)),
            }
        }
        ExprKind::Op(op, args) => match bif::eval_op(*op, &values(args)) {
            Ok(v) => local(Expr::value(v, pos)),
            Err(e) => Err(stuck(e.to_string(), redex)),
        },
        ExprKind::Fun(f) => {
            let closure = Closure {
                env: env.restrict(&free_vars(f)),
                fun: f.clone(),
            };
            local(Expr::value(Value::Closure(Arc::new(closure)), pos))
        }
        ExprKind::If(cls) => match eval_guard(cls.iter().map(|c| &c.guard), env) {
            Some(i) => Ok(Reduction::Enter {
                env: env.clone(),
                body: &cls[i].body,
                call: false,
            }),
            None => Err(stuck("no true branch found when evaluating an if expression", redex)),
        },
        ExprKind::Case(scrutinee, cls) => {
            let v = scrutinee.to_value().expect("value");
            match match_clauses(ClauseMode::Case, cls, env, std::slice::from_ref(&v)) {
                Some(sel) => Ok(Reduction::Enter {
                    env: sel.env,
                    body: sel.body,
                    call: false,
                }),
                None => Err(stuck(format!("no case clause matching {v}"), redex)),
            }
        }
        ExprKind::Receive(cls) => Ok(Reduction::Receive(cls)),
        ExprKind::Send(to, msg) => {
            let to = to.to_value().expect("value");
            let msg = msg.to_value().expect("value");
            if !matches!(to, Value::Pid(_)) {
                return Err(stuck(format!("bad argument: {to} is not a pid"), redex));
            }
            Ok(Reduction::Send { to, msg })
        }
        ExprKind::SelfPid => Ok(Reduction::SelfPid),
        ExprKind::Spawn { args, home } => {
            let target = spawn_target(program, home.as_ref(), &values(args)).map_err(|r| stuck(r, redex))?;
            Ok(Reduction::Spawn(target))
        }
        ExprKind::Call {
            module,
            callee,
            args,
            home,
        } => {
            let callee = callee.to_value().expect("value");
            let args = values(args);
            match &callee {
                Value::Atom(name) => {
                    let def = match module {
                        Some(m) => program
                            .module(m.as_str())
                            .and_then(|md| md.function(name.as_str(), args.len())),
                        None => program
                            .lookup(home.as_ref().map(Atom::as_str), name.as_str(), args.len())
                            .map(|(_, f)| f),
                    };
                    if let Some(def) = def {
                        // Call1
                        return match match_clauses(ClauseMode::Fun, &def.clauses, &Env::new(), &args) {
                            Some(sel) => Ok(Reduction::Enter {
                                env: sel.env,
                                body: sel.body,
                                call: true,
                            }),
                            None => Err(stuck(format!("no function clause matching {name}/{}", args.len()), redex)),
                        };
                    }
                    match bif::call_bif(module.as_ref().map(Atom::as_str), name.as_str(), &args) {
                        Some(Ok((v, output))) => Ok(Reduction::Local {
                            env: None,
                            new: Replacement::Owned(Expr::value(v, pos)),
                            output,
                        }),
                        Some(Err(e)) => Err(stuck(e.to_string(), redex)),
                        None => {
                            let qual = module.as_ref().map(|m| format!("{m}:")).unwrap_or_default();
                            Err(stuck(format!("undefined function {qual}{name}/{}", args.len()), redex))
                        }
                    }
                }
                // Call2
                Value::Closure(c) => {
                    if c.fun.arity() != args.len() {
                        return Err(stuck(format!("bad arity: fun of arity {} applied to {} arguments", c.fun.arity(), args.len()), redex));
                    }
                    match match_clauses(ClauseMode::Fun, &c.fun.clauses, &c.env, &args) {
                        // the body borrows from the closure, which lives in the redex
                        Some(sel) => Ok(Reduction::Enter {
                            env: sel.env,
                            body: closure_body(redex, sel.index),
                            call: true,
                        }),
                        None => Err(stuck("no function clause matching the fun's arguments", redex)),
                    }
                }
                other => Err(stuck(format!("bad function {other}"), redex)),
            }
        }
        ExprKind::Future(_) | ExprKind::Hole => Err(stuck("expression has a pending future", redex)),
        ExprKind::Lit(_) | ExprKind::Value(_) | ExprKind::Nil | ExprKind::Tuple(_) | ExprKind::Cons(..) => {
            unreachable!("values are not redexes")
        }
    }
}

fn closure_body(redex: &Expr, index: usize) -> &Expr {
    let ExprKind::Call { callee, .. } = &redex.kind else {
        unreachable!("closure call")
    };
    match &callee.kind {
        ExprKind::Value(Value::Closure(c)) => &c.fun.clauses[index].body,
        _ => unreachable!("closure call"),
    }
}

/// The kind of the next step, or why there is none, without building the
/// resulting configuration.
pub fn peek_step(program: &Program, cfg: &Config) -> Result<StepKind, StepError> {
    if cfg.expr.is_value() {
        return match cfg.stack.pop() {
            None => Err(StepError::Normal),
            Some(_) => Ok(StepKind::Tau),
        };
    }
    let redex = at(&cfg.expr, &redex_path(&cfg.expr));
    reduce(program, &cfg.env, redex).map(|r| r.kind())
}

/// Perform exactly one expression step. `fresh` names the future a
/// side-effecting step leaves behind.
pub fn step_expr(program: &Program, cfg: &Config, fresh: FutureId) -> Result<ExprStep, StepError> {
    let tau = |env: Env, expr: Expr, stack: Stack| ExprStep {
        config: Config { env, expr, stack },
        label: Label::Tau,
        output: None,
    };
    if cfg.expr.is_value() {
        return match cfg.stack.pop() {
            None => Err(StepError::Normal),
            // Seq2
            Some((Frame::Seq(ctx), rest)) => Ok(tau(cfg.env.clone(), plug(ctx, cfg.expr.clone()), rest.clone())),
            // Return
            Some((Frame::Call(env, ctx), rest)) => Ok(tau(env.clone(), plug(ctx, cfg.expr.clone()), rest.clone())),
        };
    }
    let path = redex_path(&cfg.expr);
    let redex = at(&cfg.expr, &path);
    let pos = redex.pos;
    let env = &cfg.env;
    let with = |new: Expr| {
        let mut e = cfg.expr.clone();
        replace_at(&mut e, &path, new);
        e
    };
    let context = || {
        let mut e = cfg.expr.clone();
        replace_at(&mut e, &path, Expr::new(ExprKind::Hole, pos));
        e
    };
    let labeled = |label: Label, expr: Expr, stack: Stack| ExprStep {
        config: Config {
            env: env.clone(),
            expr,
            stack,
        },
        label,
        output: None,
    };
    Ok(match reduce(program, env, redex)? {
        Reduction::Local { env: env2, new, output } => {
            let new = match new {
                Replacement::Owned(e) => e,
                Replacement::Borrowed(e) => e.clone(),
                Replacement::Rest(es) => Expr::seq(es.to_vec()),
            };
            ExprStep {
                config: Config {
                    env: env2.unwrap_or_else(|| env.clone()),
                    expr: with(new),
                    stack: cfg.stack.clone(),
                },
                label: Label::Tau,
                output,
            }
        }
        Reduction::Enter { env: env2, body, call } => {
            let frame = if call {
                Frame::Call(env.clone(), context())
            } else {
                Frame::Seq(context())
            };
            tau(env2, body.clone(), cfg.stack.push(frame))
        }
        Reduction::Receive(cls) => labeled(
            Label::Receive {
                future: fresh,
                clauses: cls.to_vec(),
            },
            Expr::new(ExprKind::Future(fresh), pos),
            cfg.stack.push(Frame::Seq(context())),
        ),
        Reduction::Send { to, msg } => labeled(Label::Send { to, msg: msg.clone() }, with(Expr::value(msg, pos)), cfg.stack.clone()),
        Reduction::SelfPid => labeled(
            Label::SelfPid { future: fresh },
            with(Expr::new(ExprKind::Future(fresh), pos)),
            cfg.stack.clone(),
        ),
        Reduction::Spawn(target) => labeled(
            Label::Spawn {
                future: fresh,
                target,
            },
            with(Expr::new(ExprKind::Future(fresh), pos)),
            cfg.stack.clone(),
        ),
    })
}

fn spawn_target(program: &Program, home: Option<&Atom>, args: &[Value]) -> Result<SpawnTarget, String> {
    match args {
        [Value::Closure(c)] => {
            let ok = c.fun.clauses.len() == 1 && c.fun.arity() == 0 && c.fun.clauses[0].guard.is_none();
            if ok {
                Ok(SpawnTarget::Closure(c.clone()))
            } else {
                Err("bad argument: spawn/1 expects fun() -> ... end".into())
            }
        }
        [Value::Atom(f), list] => {
            let list = list.as_list().ok_or("bad argument: spawn/2 expects an argument list")?;
            let (m, _) = program
                .lookup(home.map(Atom::as_str), f.as_str(), list.len())
                .ok_or_else(|| format!("undefined function {f}/{}", list.len()))?;
            Ok(SpawnTarget::Call {
                module: m.name.clone(),
                function: f.clone(),
                args: list.into_iter().cloned().collect(),
            })
        }
        [Value::Atom(m), Value::Atom(f), list] => {
            let list = list.as_list().ok_or("bad argument: spawn/3 expects an argument list")?;
            program
                .module(m.as_str())
                .and_then(|md| md.function(f.as_str(), list.len()))
                .ok_or_else(|| format!("undefined function {m}:{f}/{}", list.len()))?;
            Ok(SpawnTarget::Call {
                module: m.clone(),
                function: f.clone(),
                args: list.into_iter().cloned().collect(),
            })
        }
        _ => Err(format!("bad argument in spawn/{}", args.len())),
    }
}

/// Evaluate a purely sequential configuration to a value, for tests and
/// the REPL. Fails on side effects.
pub fn eval_to_value(program: &Program, mut cfg: Config, max_steps: usize) -> Result<(Value, Env, String), StepError> {
    let mut out = String::new();
    for _ in 0..max_steps {
        match step_expr(program, &cfg, FutureId(0)) {
            Ok(step) => {
                if !step.label.is_tau() {
                    return Err(stuck("side effect outside a process", &cfg.expr));
                }
                if let Some(o) = step.output {
                    out.push_str(&o);
                }
                cfg = step.config;
            }
            Err(StepError::Normal) => {
                let v = cfg.result().expect("final configuration has a value");
                return Ok((v, cfg.env, out));
            }
            Err(e) => return Err(e),
        }
    }
    Err(stuck("step limit reached", &cfg.expr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program};

    fn run(prog: &str, expr: &str) -> (Value, Env, String) {
        let p = parse_program(prog).unwrap();
        eval_to_value(&p, Config::new(parse_expr(expr).unwrap()), 10_000).unwrap()
    }

    #[test]
    fn match_sequence_reduces_to_value() {
        let (v, env, _) = run("", "{X,Y} = {ok,40+2}, X");
        assert_eq!(v, Value::atom("ok"));
        assert_eq!(env.get(&Var::new("X")), Some(&Value::atom("ok")));
        assert_eq!(env.get(&Var::new("Y")), Some(&Value::Int(42)));
    }

    #[test]
    fn var_rule_is_a_single_tau_step() {
        let p = Program::default();
        let env: Env = [(Var::new("X"), Value::Int(42))].into_iter().collect();
        let cfg = Config {
            env: env.clone(),
            expr: parse_expr("{X, 1}").unwrap(),
            stack: Stack::new(),
        };
        let s = step_expr(&p, &cfg, FutureId(0)).unwrap();
        assert!(s.label.is_tau());
        assert_eq!(s.config.env, env);
        assert_eq!(s.config.expr.to_value(), Some(Value::Tuple(vec![Value::Int(42), Value::Int(1)])));
    }

    #[test]
    fn side_effect_labels() {
        let p = parse_program("f(X) -> X.").unwrap();
        let cfg = Config::new(parse_expr("{a, self()}").unwrap());
        let s = step_expr(&p, &cfg, FutureId(7)).unwrap();
        assert_eq!(s.label, Label::SelfPid { future: FutureId(7) });
        assert!(matches!(&s.config.expr.kind, ExprKind::Tuple(es) if matches!(es[1].kind, ExprKind::Future(FutureId(7)))));

        let cfg = Config::new(parse_expr("spawn(main, f, [1])").unwrap());
        let s = step_expr(&p, &cfg, FutureId(1)).unwrap();
        let Label::Spawn { target: SpawnTarget::Call { module, function, args }, .. } = s.label else { panic!() };
        assert_eq!((module.as_str(), function.as_str(), args), ("main", "f", vec![Value::Int(1)]));

        let cfg = Config::new(parse_expr("receive X -> X end").unwrap());
        let s = step_expr(&p, &cfg, FutureId(2)).unwrap();
        assert!(matches!(s.label, Label::Receive { future: FutureId(2), .. }));
        assert!(matches!(s.config.stack.top(), Some(Frame::Seq(_))));
    }

    #[test]
    fn factorial() {
        let src = "fact(0) -> 1;\nfact(N) when N>0 -> N * fact(N-1).";
        assert_eq!(run(src, "fact(5)").0, Value::Int(120));
        assert_eq!(run(src, "fact(0)").0, Value::Int(1));
    }

    #[test]
    fn stack_discipline() {
        let p = parse_program("f(X) -> case X of 0 -> a; _ -> g(X) end.\ng(Y) -> Y, b.").unwrap();
        let mut cfg = Config::new(parse_expr("f(1)").unwrap());
        let (mut calls, mut returns, mut pushes, mut pops) = (0, 0, 0, 0);
        loop {
            let before = cfg.stack.depth();
            let top_is_call = matches!(cfg.stack.top(), Some(Frame::Call(..)));
            match step_expr(&p, &cfg, FutureId(0)) {
                Ok(s) => {
                    let after = s.config.stack.depth();
                    if after > before {
                        match s.config.stack.top() {
                            Some(Frame::Call(..)) => calls += 1,
                            _ => pushes += 1,
                        }
                    } else if after < before {
                        if top_is_call {
                            returns += 1
                        } else {
                            pops += 1
                        }
                    }
                    cfg = s.config;
                }
                Err(StepError::Normal) => break,
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(cfg.result(), Some(Value::atom("b")));
        assert_eq!((calls, pushes), (returns, pops));
        assert_eq!((calls, pushes), (2, 1));
    }

    #[test]
    fn closures_capture_free_variables() {
        let (v, _, _) = run("", "Y = 10, F = fun(X) -> X + Y end, F(5)");
        assert_eq!(v, Value::Int(15));
        let (v, _, _) = run("", "X = 1, F = fun(X) -> X end, F(2)");
        assert_eq!(v, Value::Int(2));
    }

    #[test]
    fn short_circuit_and_io() {
        let (v, _, out) = run("", "false andalso (1 + a), io:format(\"~p~n\", [{ok,42}])");
        assert_eq!(v, Value::atom("ok"));
        assert_eq!(out, "{ok,42}\n");
    }

    #[test]
    fn stuck_reports() {
        let p = Program::default();
        let err = eval_to_value(&p, Config::new(parse_expr("1 + ok").unwrap()), 10).unwrap_err();
        assert!(matches!(&err, StepError::Stuck { reason, .. } if reason.contains("arithmetic")), "{err}");
        let err = eval_to_value(&p, Config::new(parse_expr("X").unwrap()), 10).unwrap_err();
        assert!(err.to_string().contains("unbound"));
        let err = eval_to_value(&p, Config::new(parse_expr("case 3 of 1 -> a end").unwrap()), 10).unwrap_err();
        assert!(err.to_string().contains("case clause"));
        let err = eval_to_value(&p, Config::new(parse_expr("{A} = {1,2}").unwrap()), 10).unwrap_err();
        assert!(err.to_string().contains("no match"));
        let err = eval_to_value(&p, Config::new(parse_expr("nope(1)").unwrap()), 10).unwrap_err();
        assert!(err.to_string().contains("undefined"));
        assert_eq!(step_expr(&p, &Config::new(parse_expr("ok").unwrap()), FutureId(0)).unwrap_err(), StepError::Normal);
    }

    #[test]
    fn peek_agrees_with_step() {
        let p = parse_program("f(0) -> a; f(N) when N > 0 -> {N, f(N-1)}.\ng(X) -> X ! hi.").unwrap();
        for src in [
            "f(3)",
            "F = fun(X) -> X + 1 end, F(1), F(a)",
            "true orelse x, false andalso y, 1 andalso 2",
            "if 1 > 2 -> a; true -> b end, case c of a -> b end",
            "X = self(), X ! m, receive m -> ok end",
            "spawn(fun() -> ok end), spawn(g, [self()]), spawn(nope, [])",
            "g(foo)",
            "io:format(\"~p~n\", [1]), Y",
            "fun(X) -> X end(1, 2)",
        ] {
            let mut cfg = Config::new(parse_expr(src).unwrap());
            for _ in 0..200 {
                let step = step_expr(&p, &cfg, FutureId(0));
                assert_eq!(peek_step(&p, &cfg), step.clone().map(|s| s.label.step_kind()), "{src}");
                let Ok(s) = step else { break };
                cfg = s.config;
                // stand in for the system-level effect of self, spawn and receive
                cfg.expr = resolve_future(&cfg.expr, FutureId(0), Expr::value(Value::Pid(crate::syntax::Pid(0)), cfg.expr.pos));
            }
        }
    }

    #[test]
    fn split_and_plug_are_inverse() {
        let e = parse_expr("{a, f(X), [1|Y]}").unwrap();
        let (ctx, redex) = split(&e);
        assert!(matches!(redex.kind, ExprKind::Var(_)));
        assert_eq!(plug(&ctx, redex), e);
    }
}
