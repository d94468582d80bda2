use std::fmt;
use std::sync::Arc;

use super::value::Value;

/// A source position (1-based line and column).
///
/// Positions never participate in structural equality: two nodes that differ
/// only in where they came from compare equal.
#[derive(Clone, Copy, Debug, Default, serde::Serialize, serde::Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(Arc<str>);

impl Atom {
    pub fn new(name: &str) -> Self {
        Atom(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if needs_quotes(&self.0) {
            f.write_str("'")?;
            for c in self.0.chars() {
                match c {
                    '\'' => f.write_str("\\'")?,
                    '\\' => f.write_str("\\\\")?,
                    '\n' => f.write_str("\\n")?,
                    c => write!(f, "{c}")?,
                }
            }
            f.write_str("'")
        } else {
            f.write_str(&self.0)
        }
    }
}

fn needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return true,
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '@') {
        return true;
    }
    super::lexer::is_reserved(name)
}

/// A program variable (identifier starting with an uppercase letter or `_`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The anonymous variable `_` matches anything and never binds.
    pub fn is_wildcard(&self) -> bool {
        &*self.0 == "_"
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Atom(Atom),
    Int(i64),
    Float(f64),
    Char(char),
    Str(String),
}

impl Literal {
    pub fn to_value(&self) -> Value {
        match self {
            Literal::Atom(a) => Value::Atom(a.clone()),
            Literal::Int(i) => Value::Int(*i),
            Literal::Float(x) => Value::Float(*x),
            Literal::Char(c) => Value::Int(*c as i64),
            Literal::Str(s) => Value::string(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub kind: PatternKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatternKind {
    Var(Var),
    Lit(Literal),
    Tuple(Vec<Pattern>),
    Cons(Box<Pattern>, Box<Pattern>),
    Nil,
}

impl Pattern {
    pub fn new(kind: PatternKind, pos: Pos) -> Self {
        Pattern { kind, pos }
    }

    /// Variables in left-to-right order, with repetitions.
    pub fn vars(&self, out: &mut Vec<Var>) {
        match &self.kind {
            PatternKind::Var(v) => out.push(v.clone()),
            PatternKind::Lit(_) | PatternKind::Nil => {}
            PatternKind::Tuple(ps) => ps.iter().for_each(|p| p.vars(out)),
            PatternKind::Cons(h, t) => {
                h.vars(out);
                t.vars(out);
            }
        }
    }
}

/// Guard sequence: alternatives separated by `;`, each a conjunction of
/// tests separated by `,`.
#[derive(Clone, Debug, PartialEq)]
pub struct Guard {
    pub alternatives: Vec<Vec<Expr>>,
}

impl Guard {
    pub fn single(test: Expr) -> Self {
        Guard {
            alternatives: vec![vec![test]],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub patterns: Vec<Pattern>,
    pub guard: Option<Guard>,
    /// The clause body; a `Seq` when it has more than one expression.
    pub body: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IfClause {
    pub guard: Guard,
    pub body: Expr,
    pub pos: Pos,
}

/// `fun (Ps) [when G] -> Body; ... end`
#[derive(Clone, Debug, PartialEq)]
pub struct FunExpr {
    pub clauses: Vec<Clause>,
}

impl FunExpr {
    pub fn arity(&self) -> usize {
        self.clauses.first().map_or(0, |c| c.patterns.len())
    }
}

/// Identifier of a future: the placeholder an expression step leaves behind
/// for a value only the system level can supply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FutureId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    ExactEq,
    ExactNe,
    And,
    Or,
    Not,
    AndAlso,
    OrElse,
    Append,
    Neg,
    Plus,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Rem => "rem",
            Op::Eq => "==",
            Op::Ne => "/=",
            Op::Lt => "<",
            Op::Le => "=<",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::ExactEq => "=:=",
            Op::ExactNe => "=/=",
            Op::And => "and",
            Op::Or => "or",
            Op::Not => "not",
            Op::AndAlso => "andalso",
            Op::OrElse => "orelse",
            Op::Append => "++",
            Op::Neg => "-",
            Op::Plus => "+",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, Op::Not | Op::Neg | Op::Plus)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Var(Var),
    Tuple(Vec<Expr>),
    Nil,
    Cons(Box<Expr>, Box<Expr>),
    /// `e1, ..., en` with n >= 2; only legal at the top of a body.
    Seq(Vec<Expr>),
    Match(Pattern, Box<Expr>),
    Case(Box<Expr>, Vec<Clause>),
    If(Vec<IfClause>),
    Receive(Vec<Clause>),
    Send(Box<Expr>, Box<Expr>),
    /// `[Mod:]Callee(Args)`. `home` is the module whose source contains the
    /// call; unqualified names resolve there first.
    Call {
        module: Option<Atom>,
        callee: Box<Expr>,
        args: Vec<Expr>,
        home: Option<Atom>,
    },
    Fun(Arc<FunExpr>),
    Op(Op, Vec<Expr>),
    /// `spawn(...)` with one, two or three arguments.
    Spawn { args: Vec<Expr>, home: Option<Atom> },
    /// `self()`
    SelfPid,
    /// A runtime value plugged into an expression.
    Value(Value),
    /// A pending future produced by a side-effecting expression step.
    Future(FutureId),
    /// The hole of an evaluation context.
    Hole,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    pub fn value(v: Value, pos: Pos) -> Self {
        Expr::new(ExprKind::Value(v), pos)
    }

    pub fn atom(name: &str, pos: Pos) -> Self {
        Expr::new(ExprKind::Lit(Literal::Atom(Atom::new(name))), pos)
    }

    /// Build a body from a nonempty list of expressions.
    pub fn seq(mut exprs: Vec<Expr>) -> Self {
        assert!(!exprs.is_empty(), "empty body");
        if exprs.len() == 1 {
            exprs.pop().unwrap()
        } else {
            let pos = exprs[0].pos;
            Expr::new(ExprKind::Seq(exprs), pos)
        }
    }

    /// Values are literals, runtime values, and constructors of values.
    pub fn is_value(&self) -> bool {
        match &self.kind {
            ExprKind::Lit(_) | ExprKind::Value(_) | ExprKind::Nil => true,
            ExprKind::Tuple(es) => es.iter().all(Expr::is_value),
            ExprKind::Cons(h, t) => h.is_value() && t.is_value(),
            _ => false,
        }
    }

    pub fn to_value(&self) -> Option<Value> {
        match &self.kind {
            ExprKind::Lit(l) => Some(l.to_value()),
            ExprKind::Value(v) => Some(v.clone()),
            ExprKind::Nil => Some(Value::Nil),
            ExprKind::Tuple(es) => es
                .iter()
                .map(Expr::to_value)
                .collect::<Option<Vec<_>>>()
                .map(Value::Tuple),
            ExprKind::Cons(h, t) => Some(Value::cons(h.to_value()?, t.to_value()?)),
            _ => None,
        }
    }

    /// Every variable occurring anywhere in the expression.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        let walk_clause = |c: &Clause, out: &mut Vec<Var>| {
            c.patterns.iter().for_each(|p| p.vars(out));
            if let Some(g) = &c.guard {
                g.alternatives.iter().flatten().for_each(|e| e.collect_vars(out));
            }
            c.body.collect_vars(out);
        };
        match &self.kind {
            ExprKind::Var(v) => out.push(v.clone()),
            ExprKind::Lit(_)
            | ExprKind::Nil
            | ExprKind::SelfPid
            | ExprKind::Value(_)
            | ExprKind::Future(_)
            | ExprKind::Hole => {}
            ExprKind::Tuple(es) | ExprKind::Seq(es) | ExprKind::Op(_, es) => {
                es.iter().for_each(|e| e.collect_vars(out))
            }
            ExprKind::Spawn { args, .. } => args.iter().for_each(|e| e.collect_vars(out)),
            ExprKind::Cons(a, b) | ExprKind::Send(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ExprKind::Match(p, e) => {
                p.vars(out);
                e.collect_vars(out);
            }
            ExprKind::Case(e, cls) => {
                e.collect_vars(out);
                cls.iter().for_each(|c| walk_clause(c, out));
            }
            ExprKind::Receive(cls) => cls.iter().for_each(|c| walk_clause(c, out)),
            ExprKind::If(cls) => {
                for c in cls {
                    c.guard.alternatives.iter().flatten().for_each(|e| e.collect_vars(out));
                    c.body.collect_vars(out);
                }
            }
            ExprKind::Call { callee, args, .. } => {
                callee.collect_vars(out);
                args.iter().for_each(|e| e.collect_vars(out));
            }
            ExprKind::Fun(f) => f.clauses.iter().for_each(|c| walk_clause(c, out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunDef {
    pub name: Atom,
    pub arity: usize,
    pub clauses: Vec<Clause>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Module {
    pub name: Atom,
    pub functions: Vec<FunDef>,
}

impl Module {
    pub fn function(&self, name: &str, arity: usize) -> Option<&FunDef> {
        self.functions
            .iter()
            .find(|f| f.name.as_str() == name && f.arity == arity)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub modules: Vec<Module>,
}

impl Program {
    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name.as_str() == name)
    }

    /// Resolve `name/arity`: in `home` when given and defined there,
    /// otherwise in the first module that defines it.
    pub fn lookup(&self, home: Option<&str>, name: &str, arity: usize) -> Option<(&Module, &FunDef)> {
        if let Some(m) = home.and_then(|h| self.module(h)) {
            if let Some(f) = m.function(name, arity) {
                return Some((m, f));
            }
        }
        self.modules
            .iter()
            .find_map(|m| m.function(name, arity).map(|f| (m, f)))
    }

    pub fn functions(&self) -> impl Iterator<Item = (&Module, &FunDef)> {
        self.modules
            .iter()
            .flat_map(|m| m.functions.iter().map(move |f| (m, f)))
    }
}
