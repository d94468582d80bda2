use std::fmt::{self, Write};

use super::ast::*;
use super::value::{write_float, write_string_literal};

pub fn pretty_expr(e: &Expr) -> String {
    let mut p = Printer::default();
    p.expr(e, 0);
    p.out
}

pub fn pretty_pattern(pat: &Pattern) -> String {
    let mut p = Printer::default();
    p.pattern(pat);
    p.out
}

pub fn pretty_program(prog: &Program) -> String {
    let mut p = Printer::default();
    for (i, m) in prog.modules.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        let _ = writeln!(p.out, "-module({}).", m.name);
        for f in &m.functions {
            p.out.push('\n');
            p.fundef(f);
        }
    }
    p.out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_pattern(self))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Atom(a) => write!(f, "{a}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write_float(f, *x),
            Literal::Char(c) => match c {
                '\n' => f.write_str("$\\n"),
                '\t' => f.write_str("$\\t"),
                '\r' => f.write_str("$\\r"),
                ' ' => f.write_str("$\\s"),
                '\\' => f.write_str("$\\\\"),
                c => write!(f, "${c}"),
            },
            Literal::Str(s) => write_string_literal(f, s),
        }
    }
}

const P_SEQ: u8 = 0;
const P_MATCH: u8 = 1;
const P_ORELSE: u8 = 2;
const P_UNARY: u8 = 8;
const P_PRIMARY: u8 = 9;

/// (precedence, left operand minimum, right operand minimum)
fn binary_prec(op: Op) -> (u8, u8, u8) {
    match op {
        Op::OrElse => (2, 3, 2),
        Op::AndAlso => (3, 4, 3),
        Op::Eq | Op::Ne | Op::ExactEq | Op::ExactNe | Op::Lt | Op::Le | Op::Gt | Op::Ge => (4, 5, 5),
        Op::Append => (5, 6, 5),
        Op::Add | Op::Sub | Op::Or => (6, 6, 7),
        Op::Mul | Op::Div | Op::Rem | Op::And => (7, 7, 8),
        Op::Not | Op::Neg | Op::Plus => (P_UNARY, P_UNARY, P_UNARY),
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Seq(_) => P_SEQ,
        ExprKind::Match(..) | ExprKind::Send(..) => P_MATCH,
        ExprKind::Op(_, args) if args.len() == 1 => P_UNARY,
        ExprKind::Op(op, _) => binary_prec(*op).0,
        ExprKind::Lit(Literal::Int(i)) if *i < 0 => P_UNARY,
        ExprKind::Lit(Literal::Float(x)) if x.is_sign_negative() => P_UNARY,
        _ => P_PRIMARY,
    }
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn fundef(&mut self, f: &FunDef) {
        for (i, c) in f.clauses.iter().enumerate() {
            if i > 0 {
                self.out.push(';');
                self.out.push('\n');
            }
            let _ = write!(self.out, "{}", f.name);
            self.params(&c.patterns);
            self.guard_opt(c.guard.as_ref());
            self.out.push_str(" ->");
            self.body(&c.body);
        }
        self.out.push_str(".\n");
    }

    fn params(&mut self, ps: &[Pattern]) {
        self.out.push('(');
        for (i, p) in ps.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.pattern(p);
        }
        self.out.push(')');
    }

    fn guard_opt(&mut self, g: Option<&Guard>) {
        if let Some(g) = g {
            self.out.push_str(" when ");
            self.guard(g);
        }
    }

    fn guard(&mut self, g: &Guard) {
        for (i, alt) in g.alternatives.iter().enumerate() {
            if i > 0 {
                self.out.push_str("; ");
            }
            for (j, t) in alt.iter().enumerate() {
                if j > 0 {
                    self.out.push_str(", ");
                }
                self.expr(t, P_MATCH);
            }
        }
    }

    /// Clause body on its own indented lines.
    fn body(&mut self, body: &Expr) {
        self.indent += 1;
        let items: &[Expr] = match &body.kind {
            ExprKind::Seq(es) => es,
            _ => std::slice::from_ref(body),
        };
        for (i, e) in items.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            self.newline();
            self.expr(e, P_MATCH);
        }
        self.indent -= 1;
    }

    fn clauses(&mut self, cls: &[Clause]) {
        self.indent += 1;
        for (i, c) in cls.iter().enumerate() {
            if i > 0 {
                self.out.push(';');
            }
            self.newline();
            for (j, p) in c.patterns.iter().enumerate() {
                if j > 0 {
                    self.out.push_str(", ");
                }
                self.pattern(p);
            }
            self.guard_opt(c.guard.as_ref());
            self.out.push_str(" ->");
            self.body(&c.body);
        }
        self.indent -= 1;
        self.newline();
    }

    fn list<T>(&mut self, items: &[T], sep: &str, mut f: impl FnMut(&mut Self, &T)) {
        for (i, x) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(sep);
            }
            f(self, x);
        }
    }

    fn expr(&mut self, e: &Expr, min: u8) {
        let parens = prec(e) < min;
        if parens {
            self.out.push('(');
        }
        self.expr_inner(e);
        if parens {
            self.out.push(')');
        }
    }

    fn expr_inner(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Lit(l) => {
                let _ = write!(self.out, "{l}");
            }
            ExprKind::Var(v) => self.out.push_str(v.as_str()),
            ExprKind::Value(v) => {
                let _ = write!(self.out, "{v}");
            }
            ExprKind::Future(k) => {
                let _ = write!(self.out, "<future {}>", k.0);
            }
            ExprKind::Hole => self.out.push('_'),
            ExprKind::Nil => self.out.push_str("[]"),
            ExprKind::Tuple(es) => {
                self.out.push('{');
                self.list(es, ",", |p, e| p.expr(e, P_MATCH));
                self.out.push('}');
            }
            ExprKind::Cons(..) => {
                self.out.push('[');
                let mut cur = e;
                let mut first = true;
                loop {
                    match &cur.kind {
                        ExprKind::Cons(h, t) => {
                            if !first {
                                self.out.push(',');
                            }
                            first = false;
                            self.expr(h, P_MATCH);
                            cur = t;
                        }
                        ExprKind::Nil => break,
                        _ => {
                            self.out.push('|');
                            self.expr(cur, P_MATCH);
                            break;
                        }
                    }
                }
                self.out.push(']');
            }
            ExprKind::Seq(es) => self.list(es, ", ", |p, e| p.expr(e, P_MATCH)),
            ExprKind::Match(pat, rhs) => {
                self.pattern(pat);
                self.out.push_str(" = ");
                self.expr(rhs, P_MATCH);
            }
            ExprKind::Send(to, msg) => {
                self.expr(to, P_ORELSE);
                self.out.push_str(" ! ");
                self.expr(msg, P_MATCH);
            }
            ExprKind::Op(op, args) if args.len() == 1 => {
                let mut inner = Printer {
                    indent: self.indent,
                    ..Printer::default()
                };
                inner.expr(&args[0], P_UNARY);
                self.out.push_str(op.symbol());
                if *op == Op::Not || inner.out.starts_with(['-', '+']) {
                    self.out.push(' ');
                }
                self.out.push_str(&inner.out);
            }
            ExprKind::Op(op, args) => {
                let (_, lmin, rmin) = binary_prec(*op);
                self.expr(&args[0], lmin);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(&args[1], rmin);
            }
            ExprKind::Case(scrutinee, cls) => {
                self.out.push_str("case ");
                self.expr(scrutinee, P_MATCH);
                self.out.push_str(" of");
                self.clauses(cls);
                self.out.push_str("end");
            }
            ExprKind::Receive(cls) => {
                self.out.push_str("receive");
                self.clauses(cls);
                self.out.push_str("end");
            }
            ExprKind::If(cls) => {
                self.out.push_str("if");
                self.indent += 1;
                for (i, c) in cls.iter().enumerate() {
                    if i > 0 {
                        self.out.push(';');
                    }
                    self.newline();
                    self.guard(&c.guard);
                    self.out.push_str(" ->");
                    self.body(&c.body);
                }
                self.indent -= 1;
                self.newline();
                self.out.push_str("end");
            }
            ExprKind::Fun(f) => {
                self.out.push_str("fun");
                for (i, c) in f.clauses.iter().enumerate() {
                    if i > 0 {
                        self.out.push(';');
                        self.newline();
                        self.out.push_str("   ");
                    }
                    self.params(&c.patterns);
                    self.guard_opt(c.guard.as_ref());
                    self.out.push_str(" ->");
                    self.body(&c.body);
                }
                self.newline();
                self.out.push_str("end");
            }
            ExprKind::Call {
                module,
                callee,
                args,
                ..
            } => {
                if let Some(m) = module {
                    let _ = write!(self.out, "{m}:");
                }
                self.expr(callee, P_PRIMARY);
                self.out.push('(');
                self.list(args, ", ", |p, e| p.expr(e, P_MATCH));
                self.out.push(')');
            }
            ExprKind::Spawn { args, .. } => {
                self.out.push_str("spawn(");
                self.list(args, ", ", |p, e| p.expr(e, P_MATCH));
                self.out.push(')');
            }
            ExprKind::SelfPid => self.out.push_str("self()"),
        }
    }

    fn pattern(&mut self, p: &Pattern) {
        match &p.kind {
            PatternKind::Var(v) => self.out.push_str(v.as_str()),
            PatternKind::Lit(l) => {
                let _ = write!(self.out, "{l}");
            }
            PatternKind::Nil => self.out.push_str("[]"),
            PatternKind::Tuple(ps) => {
                self.out.push('{');
                self.list(ps, ",", |s, p| s.pattern(p));
                self.out.push('}');
            }
            PatternKind::Cons(..) => {
                self.out.push('[');
                let mut cur = p;
                let mut first = true;
                loop {
                    match &cur.kind {
                        PatternKind::Cons(h, t) => {
                            if !first {
                                self.out.push(',');
                            }
                            first = false;
                            self.pattern(h);
                            cur = t;
                        }
                        PatternKind::Nil => break,
                        _ => {
                            self.out.push('|');
                            self.pattern(cur);
                            break;
                        }
                    }
                }
                self.out.push(']');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, parse_program};
    use super::*;

    #[test]
    fn tuples_and_nil() {
        assert_eq!(pretty_expr(&parse_expr("{ok, 42}").unwrap()), "{ok,42}");
        assert_eq!(pretty_expr(&parse_expr("[]").unwrap()), "[]");
        assert_eq!(pretty_expr(&parse_expr("[1,2|T]").unwrap()), "[1,2|T]");
    }

    #[test]
    fn parens_follow_precedence() {
        for src in ["(1 + 2) * 3", "1 - (2 - 3)", "- (X + 1)", "not (A and B)", "X = Y = 3", "A ! B ! c"] {
            let e = parse_expr(src).unwrap();
            let text = pretty_expr(&e);
            assert_eq!(parse_expr(&text).unwrap(), e, "{src} -> {text}");
        }
        assert_eq!(pretty_expr(&parse_expr("(1 + 2) * 3").unwrap()), "(1 + 2) * 3");
        assert_eq!(pretty_expr(&parse_expr("1 + 2 * 3").unwrap()), "1 + 2 * 3");
    }

    #[test]
    fn program_round_trip() {
        let src = "fact(0) -> 1;\nfact(N) when N > 0 -> N * fact(N - 1).\n\
                   g(F) -> case F(1) of {ok, X} when X >= 0; X == a -> X; _ -> if true -> $a end end.\n\
                   h() -> fun (0) -> \"s\\n\"; (N) -> N end.";
        let p = parse_program(src).unwrap();
        let text = pretty_program(&p);
        assert_eq!(parse_program(&text).unwrap(), p, "{text}");
    }
}
