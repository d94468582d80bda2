use std::collections::BTreeSet;
use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Name of the module that collects functions appearing before any
/// `-module(...)` header.
pub const DEFAULT_MODULE: &str = "main";

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    Parser::new(src)?.program()
}

/// Parses an expression sequence `e1, ..., en` with an optional final `.`.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let body = p.body()?;
    if p.peek() == &Tok::Dot {
        p.advance();
    }
    p.expect_eof()?;
    Ok(body)
}

pub fn parse_pattern(src: &str) -> Result<Pattern, ParseError> {
    let mut p = Parser::new(src)?;
    let pat = p.pattern()?;
    p.expect_eof()?;
    Ok(pat)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    home: Option<Atom>,
}

// Binding powers, loosest first.
const P_ORELSE: u8 = 2;
const P_ANDALSO: u8 = 3;
const P_CMP: u8 = 4;
const P_APPEND: u8 = 5;
const P_ADD: u8 = 6;
const P_MUL: u8 = 7;

#[derive(Clone, Copy, PartialEq)]
enum Assoc {
    Left,
    Right,
    Non,
}

fn binary_op(tok: &Tok) -> Option<(Op, u8, Assoc)> {
    let r = match tok {
        Tok::Kw("orelse") => (Op::OrElse, P_ORELSE, Assoc::Right),
        Tok::Kw("andalso") => (Op::AndAlso, P_ANDALSO, Assoc::Right),
        Tok::Sym("==") => (Op::Eq, P_CMP, Assoc::Non),
        Tok::Sym("/=") => (Op::Ne, P_CMP, Assoc::Non),
        Tok::Sym("=:=") => (Op::ExactEq, P_CMP, Assoc::Non),
        Tok::Sym("=/=") => (Op::ExactNe, P_CMP, Assoc::Non),
        Tok::Sym("<") => (Op::Lt, P_CMP, Assoc::Non),
        Tok::Sym("=<") => (Op::Le, P_CMP, Assoc::Non),
        Tok::Sym(">") => (Op::Gt, P_CMP, Assoc::Non),
        Tok::Sym(">=") => (Op::Ge, P_CMP, Assoc::Non),
        Tok::Sym("++") => (Op::Append, P_APPEND, Assoc::Right),
        Tok::Sym("+") => (Op::Add, P_ADD, Assoc::Left),
        Tok::Sym("-") => (Op::Sub, P_ADD, Assoc::Left),
        Tok::Kw("or") => (Op::Or, P_ADD, Assoc::Left),
        Tok::Sym("*") => (Op::Mul, P_MUL, Assoc::Left),
        Tok::Sym("/") => (Op::Div, P_MUL, Assoc::Left),
        Tok::Kw("rem") => (Op::Rem, P_MUL, Assoc::Left),
        Tok::Kw("and") => (Op::And, P_MUL, Assoc::Left),
        _ => return None,
    };
    Some(r)
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            i: 0,
            home: None,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::Unexpected {
            pos: self.pos(),
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn invalid(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Invalid {
            pos,
            message: message.into(),
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(x) if *x == s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Kw(x) if *x == k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&[s]))
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> Result<(), ParseError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.unexpected(&[k]))
        }
    }

    fn expect_dot(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Dot {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&["."]))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }

    fn atom_name(&mut self) -> Result<(String, Pos), ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Atom(a) => {
                self.advance();
                Ok((a, pos))
            }
            _ => Err(self.unexpected(&["atom"])),
        }
    }

    // ---- forms ----

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut modules: Vec<Module> = Vec::new();
        let mut current: Option<Module> = None;
        let mut seen: BTreeSet<(String, usize)> = BTreeSet::new();
        while self.peek() != &Tok::Eof {
            if self.peek() == &Tok::Sym("-") {
                let pos = self.pos();
                self.advance();
                let (attr, _) = self.atom_name()?;
                self.expect_sym("(")?;
                match attr.as_str() {
                    "module" => {
                        let (name, npos) = self.atom_name()?;
                        self.expect_sym(")")?;
                        self.expect_dot()?;
                        if modules.iter().chain(current.iter()).any(|m| m.name.as_str() == name) {
                            return Err(Self::invalid(npos, format!("module {name} defined twice")));
                        }
                        if let Some(m) = current.take() {
                            modules.push(m);
                        }
                        seen.clear();
                        self.home = Some(Atom::new(&name));
                        current = Some(Module {
                            name: Atom::new(&name),
                            functions: Vec::new(),
                        });
                    }
                    "export" => {
                        self.export_list()?;
                        self.expect_sym(")")?;
                        self.expect_dot()?;
                    }
                    other => {
                        return Err(Self::invalid(pos, format!("unsupported attribute -{other}")));
                    }
                }
                continue;
            }
            if current.is_none() {
                self.home = Some(Atom::new(DEFAULT_MODULE));
                current = Some(Module {
                    name: Atom::new(DEFAULT_MODULE),
                    functions: Vec::new(),
                });
            }
            let def = self.function()?;
            if !seen.insert((def.name.as_str().to_string(), def.arity)) {
                return Err(Self::invalid(
                    def.pos,
                    format!("function {}/{} already defined", def.name, def.arity),
                ));
            }
            current.as_mut().unwrap().functions.push(def);
        }
        if let Some(m) = current {
            modules.push(m);
        }
        Ok(Program { modules })
    }

    fn export_list(&mut self) -> Result<(), ParseError> {
        self.expect_sym("[")?;
        if self.eat_sym("]") {
            return Ok(());
        }
        loop {
            self.atom_name()?;
            self.expect_sym("/")?;
            match self.peek() {
                Tok::Int(_) => {
                    self.advance();
                }
                _ => return Err(self.unexpected(&["integer"])),
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("]")
    }

    fn function(&mut self) -> Result<FunDef, ParseError> {
        let pos = self.pos();
        let (name, _) = self.atom_name()?;
        let mut clauses = Vec::new();
        loop {
            let cpos = self.pos();
            let params = self.param_list()?;
            let guard = self.opt_guard()?;
            self.expect_sym("->")?;
            let body = self.body()?;
            if let Some(first) = clauses.first() {
                let first: &Clause = first;
                if first.patterns.len() != params.len() {
                    return Err(Self::invalid(
                        cpos,
                        format!(
                            "arity mismatch in clauses of {name}: {} versus {}",
                            first.patterns.len(),
                            params.len()
                        ),
                    ));
                }
            }
            clauses.push(Clause {
                patterns: params,
                guard,
                body,
                pos: cpos,
            });
            if self.eat_sym(";") {
                let hpos = self.pos();
                let (next, _) = self.atom_name()?;
                if next != name {
                    return Err(Self::invalid(
                        hpos,
                        format!("head mismatch: clause of {next} inside definition of {name}"),
                    ));
                }
                continue;
            }
            self.expect_dot()?;
            break;
        }
        Ok(FunDef {
            name: Atom::new(&name),
            arity: clauses[0].patterns.len(),
            clauses,
            pos,
        })
    }

    fn param_list(&mut self) -> Result<Vec<Pattern>, ParseError> {
        self.expect_sym("(")?;
        let mut ps = Vec::new();
        if self.eat_sym(")") {
            return Ok(ps);
        }
        loop {
            ps.push(self.pattern()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(ps)
    }

    fn opt_guard(&mut self) -> Result<Option<Guard>, ParseError> {
        if self.eat_kw("when") {
            Ok(Some(self.guard()?))
        } else {
            Ok(None)
        }
    }

    fn guard(&mut self) -> Result<Guard, ParseError> {
        let mut alternatives = Vec::new();
        loop {
            let mut tests = Vec::new();
            loop {
                let e = self.expr()?;
                check_guard(&e)?;
                tests.push(e);
                if !self.eat_sym(",") {
                    break;
                }
            }
            alternatives.push(tests);
            if !self.eat_sym(";") {
                break;
            }
        }
        Ok(Guard { alternatives })
    }

    fn body(&mut self) -> Result<Expr, ParseError> {
        let mut es = vec![self.expr()?];
        while self.eat_sym(",") {
            es.push(self.expr()?);
        }
        Ok(Expr::seq(es))
    }

    // ---- patterns ----

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let e = self.expr()?;
        to_pattern(&e)
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.binary(P_ORELSE)?;
        let pos = lhs.pos;
        if self.eat_sym("=") {
            let pat = to_pattern(&lhs)?;
            let rhs = self.expr()?;
            return Ok(Expr::new(ExprKind::Match(pat, Box::new(rhs)), pos));
        }
        if self.eat_sym("!") {
            let rhs = self.expr()?;
            return Ok(Expr::new(ExprKind::Send(Box::new(lhs), Box::new(rhs)), pos));
        }
        Ok(lhs)
    }

    fn binary(&mut self, min: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        let mut last_cmp = false;
        while let Some((op, prec, assoc)) = binary_op(self.peek()) {
            if prec < min {
                break;
            }
            if assoc == Assoc::Non && last_cmp {
                return Err(Self::invalid(self.pos(), "comparison operators do not chain"));
            }
            self.advance();
            let next_min = if assoc == Assoc::Right { prec } else { prec + 1 };
            let rhs = self.binary(next_min)?;
            let pos = lhs.pos;
            lhs = Expr::new(ExprKind::Op(op, vec![lhs, rhs]), pos);
            last_cmp = assoc == Assoc::Non;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Sym("-") => Op::Neg,
            Tok::Sym("+") => Op::Plus,
            Tok::Kw("not") => Op::Not,
            Tok::Kw(k @ ("bnot" | "div" | "band" | "bor" | "bxor" | "bsl" | "bsr" | "xor")) => {
                return Err(Self::invalid(pos, format!("unsupported operator {k}")));
            }
            _ => return self.postfix(),
        };
        self.advance();
        let arg = self.unary()?;
        if op == Op::Neg {
            match &arg.kind {
                ExprKind::Lit(Literal::Int(i)) => {
                    let n = i.checked_neg().ok_or_else(|| Self::invalid(pos, "integer out of range"))?;
                    return Ok(Expr::new(ExprKind::Lit(Literal::Int(n)), pos));
                }
                ExprKind::Lit(Literal::Float(x)) => {
                    return Ok(Expr::new(ExprKind::Lit(Literal::Float(-x)), pos));
                }
                _ => {}
            }
        }
        Ok(Expr::new(ExprKind::Op(op, vec![arg]), pos))
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.peek() == &Tok::Sym(":") {
                let pos = e.pos;
                let module = match &e.kind {
                    ExprKind::Lit(Literal::Atom(a)) => a.clone(),
                    _ => return Err(Self::invalid(self.pos(), "module qualifier must be an atom")),
                };
                self.advance();
                let (fname, fpos) = self.atom_name()?;
                if self.peek() != &Tok::Sym("(") {
                    return Err(self.unexpected(&["("]));
                }
                let args = self.arg_list()?;
                e = self.make_call(Some(module), Expr::atom(&fname, fpos), args, pos);
                continue;
            }
            if self.peek() == &Tok::Sym("(") {
                let pos = e.pos;
                match &e.kind {
                    ExprKind::Lit(Literal::Atom(_))
                    | ExprKind::Var(_)
                    | ExprKind::Fun(_)
                    | ExprKind::Call { .. } => {}
                    _ => return Err(Self::invalid(self.pos(), "expression is not callable")),
                }
                let args = self.arg_list()?;
                e = self.make_call(None, e, args, pos);
                continue;
            }
            return Ok(e);
        }
    }

    fn make_call(&self, module: Option<Atom>, callee: Expr, args: Vec<Expr>, pos: Pos) -> Expr {
        let erlang = module.as_ref().is_some_and(|m| m.as_str() == "erlang");
        if module.is_none() || erlang {
            if let ExprKind::Lit(Literal::Atom(name)) = &callee.kind {
                match (name.as_str(), args.len()) {
                    ("self", 0) => return Expr::new(ExprKind::SelfPid, pos),
                    ("spawn", 1..=3) => {
                        return Expr::new(
                            ExprKind::Spawn {
                                args,
                                home: self.home.clone(),
                            },
                            pos,
                        )
                    }
                    _ => {}
                }
            }
        }
        Expr::new(
            ExprKind::Call {
                module,
                callee: Box::new(callee),
                args,
                home: self.home.clone(),
            },
            pos,
        )
    }

    fn arg_list(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let lit = |l| Ok(Expr::new(ExprKind::Lit(l), pos));
        match self.peek().clone() {
            Tok::Atom(a) => {
                self.advance();
                lit(Literal::Atom(Atom::new(&a)))
            }
            Tok::Var(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Var(Var::new(&v)), pos))
            }
            Tok::Int(i) => {
                self.advance();
                lit(Literal::Int(i))
            }
            Tok::Float(x) => {
                self.advance();
                lit(Literal::Float(x))
            }
            Tok::Char(c) => {
                self.advance();
                lit(Literal::Char(c))
            }
            Tok::Str(s) => {
                self.advance();
                let mut s = s;
                while let Tok::Str(more) = self.peek().clone() {
                    self.advance();
                    s.push_str(&more);
                }
                lit(Literal::Str(s))
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => {
                self.advance();
                let mut es = Vec::new();
                if !self.eat_sym("}") {
                    loop {
                        es.push(self.expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym("}")?;
                }
                Ok(Expr::new(ExprKind::Tuple(es), pos))
            }
            Tok::Sym("[") => {
                self.advance();
                if self.eat_sym("]") {
                    return Ok(Expr::new(ExprKind::Nil, pos));
                }
                let mut items = Vec::new();
                loop {
                    items.push(self.expr()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                let tail = if self.eat_sym("|") {
                    self.expr()?
                } else {
                    Expr::new(ExprKind::Nil, self.pos())
                };
                self.expect_sym("]")?;
                Ok(items.into_iter().rev().fold(tail, |t, h| {
                    let p = h.pos;
                    Expr::new(ExprKind::Cons(Box::new(h), Box::new(t)), p)
                }))
            }
            Tok::Kw("case") => {
                self.advance();
                let scrutinee = self.expr()?;
                self.expect_kw("of")?;
                let clauses = self.clauses()?;
                self.expect_kw("end")?;
                Ok(Expr::new(ExprKind::Case(Box::new(scrutinee), clauses), pos))
            }
            Tok::Kw("receive") => {
                self.advance();
                let clauses = self.clauses()?;
                if self.peek() == &Tok::Kw("after") {
                    return Err(Self::invalid(self.pos(), "receive timeouts are not supported"));
                }
                self.expect_kw("end")?;
                Ok(Expr::new(ExprKind::Receive(clauses), pos))
            }
            Tok::Kw("if") => {
                self.advance();
                let mut clauses = Vec::new();
                loop {
                    let cpos = self.pos();
                    let guard = self.guard()?;
                    self.expect_sym("->")?;
                    let body = self.body()?;
                    clauses.push(IfClause {
                        guard,
                        body,
                        pos: cpos,
                    });
                    if !self.eat_sym(";") {
                        break;
                    }
                }
                self.expect_kw("end")?;
                Ok(Expr::new(ExprKind::If(clauses), pos))
            }
            Tok::Kw("fun") => {
                self.advance();
                let mut clauses = Vec::new();
                loop {
                    let cpos = self.pos();
                    let patterns = self.param_list()?;
                    if let Some(first) = clauses.first() {
                        let first: &Clause = first;
                        if first.patterns.len() != patterns.len() {
                            return Err(Self::invalid(cpos, "arity mismatch in fun clauses"));
                        }
                    }
                    let guard = self.opt_guard()?;
                    self.expect_sym("->")?;
                    let body = self.body()?;
                    clauses.push(Clause {
                        patterns,
                        guard,
                        body,
                        pos: cpos,
                    });
                    if !self.eat_sym(";") {
                        break;
                    }
                }
                self.expect_kw("end")?;
                Ok(Expr::new(ExprKind::Fun(Arc::new(FunExpr { clauses })), pos))
            }
            Tok::Kw(k @ ("try" | "catch" | "begin" | "after" | "cond" | "let")) => {
                Err(Self::invalid(pos, format!("'{k}' is not supported")))
            }
            _ => Err(self.unexpected(&[
                "atom", "variable", "number", "string", "(", "{", "[", "case", "if", "receive", "fun",
            ])),
        }
    }

    /// `Pattern [when Guard] -> Body; ...` for case and receive.
    fn clauses(&mut self) -> Result<Vec<Clause>, ParseError> {
        let mut out = Vec::new();
        loop {
            let cpos = self.pos();
            let pat = self.pattern()?;
            let guard = self.opt_guard()?;
            self.expect_sym("->")?;
            let body = self.body()?;
            out.push(Clause {
                patterns: vec![pat],
                guard,
                body,
                pos: cpos,
            });
            if !self.eat_sym(";") {
                break;
            }
        }
        Ok(out)
    }
}

fn to_pattern(e: &Expr) -> Result<Pattern, ParseError> {
    let kind = match &e.kind {
        ExprKind::Var(v) => PatternKind::Var(v.clone()),
        ExprKind::Lit(l) => PatternKind::Lit(l.clone()),
        ExprKind::Nil => PatternKind::Nil,
        ExprKind::Tuple(es) => PatternKind::Tuple(es.iter().map(to_pattern).collect::<Result<_, _>>()?),
        ExprKind::Cons(h, t) => PatternKind::Cons(Box::new(to_pattern(h)?), Box::new(to_pattern(t)?)),
        _ => {
            return Err(ParseError::Invalid {
                pos: e.pos,
                message: "illegal pattern".into(),
            })
        }
    };
    Ok(Pattern::new(kind, e.pos))
}

const GUARD_BIFS: &[(&str, usize)] = &[
    ("abs", 1),
    ("element", 2),
    ("hd", 1),
    ("is_atom", 1),
    ("is_float", 1),
    ("is_function", 1),
    ("is_integer", 1),
    ("is_list", 1),
    ("is_number", 1),
    ("is_pid", 1),
    ("is_tuple", 1),
    ("length", 1),
    ("tl", 1),
    ("tuple_size", 1),
];

pub fn is_guard_bif(name: &str, arity: usize) -> bool {
    GUARD_BIFS.contains(&(name, arity))
}

fn check_guard(e: &Expr) -> Result<(), ParseError> {
    let bad = |what: &str| {
        Err(ParseError::Invalid {
            pos: e.pos,
            message: format!("{what} is not allowed in a guard"),
        })
    };
    match &e.kind {
        ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::Nil | ExprKind::Value(_) => Ok(()),
        ExprKind::Tuple(es) | ExprKind::Op(_, es) => es.iter().try_for_each(check_guard),
        ExprKind::Cons(h, t) => {
            check_guard(h)?;
            check_guard(t)
        }
        ExprKind::Call {
            module,
            callee,
            args,
            ..
        } => {
            let name = match &callee.kind {
                ExprKind::Lit(Literal::Atom(a)) => a.as_str(),
                _ => return bad("a call through a variable"),
            };
            let erlang = module.as_ref().is_none_or(|m| m.as_str() == "erlang");
            if !erlang || !is_guard_bif(name, args.len()) {
                return bad(&format!("call to {name}/{}", args.len()));
            }
            args.iter().try_for_each(check_guard)
        }
        ExprKind::SelfPid => bad("self()"),
        ExprKind::Spawn { .. } => bad("spawn"),
        ExprKind::Send(..) => bad("a send"),
        ExprKind::Receive(_) => bad("receive"),
        ExprKind::Match(..) => bad("a match"),
        ExprKind::Case(..) => bad("case"),
        ExprKind::If(_) => bad("if"),
        ExprKind::Fun(_) => bad("fun"),
        ExprKind::Seq(_) | ExprKind::Future(_) | ExprKind::Hole => bad("this expression"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_listing() {
        let p = parse_program("fact(0) -> 1;\nfact(N) when N>0 -> N * fact(N-1).").unwrap();
        assert_eq!(p.modules.len(), 1);
        let f = p.lookup(None, "fact", 1).unwrap().1;
        assert_eq!(f.clauses.len(), 2);
        assert!(f.clauses[0].guard.is_none());
        assert!(f.clauses[1].guard.is_some());
        assert_eq!(f.clauses[1].pos.line, 2);
    }

    #[test]
    fn empty_source_has_no_modules() {
        assert_eq!(parse_program("").unwrap().modules.len(), 0);
        assert_eq!(parse_program("% only a comment\n").unwrap().modules.len(), 0);
    }

    #[test]
    fn match_then_variable() {
        let e = parse_expr("{X,Y} = {ok,40+2}, X").unwrap();
        let ExprKind::Seq(es) = &e.kind else { panic!("{e:?}") };
        assert_eq!(es.len(), 2);
        let ExprKind::Match(p, _) = &es[0].kind else { panic!() };
        assert!(matches!(&p.kind, PatternKind::Tuple(ps) if ps.len() == 2));
        assert!(matches!(&es[1].kind, ExprKind::Var(v) if v.as_str() == "X"));
    }

    #[test]
    fn builtins_and_send() {
        assert!(matches!(parse_expr("self()").unwrap().kind, ExprKind::SelfPid));
        let e = parse_expr("S ! {del,10,self()}").unwrap();
        let ExprKind::Send(to, msg) = &e.kind else { panic!() };
        assert!(matches!(&to.kind, ExprKind::Var(_)));
        assert!(matches!(&msg.kind, ExprKind::Tuple(es) if es.len() == 3));
        assert!(matches!(
            parse_expr("spawn(f, [1])").unwrap().kind,
            ExprKind::Spawn { ref args, .. } if args.len() == 2
        ));
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2 * 3 == 7 andalso not false").unwrap();
        let ExprKind::Op(Op::AndAlso, args) = &e.kind else { panic!() };
        assert!(matches!(&args[0].kind, ExprKind::Op(Op::Eq, _)));
        let e = parse_expr("A - B - C").unwrap();
        let ExprKind::Op(Op::Sub, args) = &e.kind else { panic!() };
        assert!(matches!(&args[0].kind, ExprKind::Op(Op::Sub, _)));
        let e = parse_expr("A ++ B ++ C").unwrap();
        let ExprKind::Op(Op::Append, args) = &e.kind else { panic!() };
        assert!(matches!(&args[1].kind, ExprKind::Op(Op::Append, _)));
        assert!(parse_expr("1 < 2 < 3").is_err());
        assert_eq!(parse_expr("-5").unwrap().kind, ExprKind::Lit(Literal::Int(-5)));
    }

    #[test]
    fn sequence_in_single_slot_rejected() {
        let err = parse_expr("case X=1,X of _ -> ok end").unwrap_err();
        assert!(err.to_string().contains("expected of"), "{err}");
        assert!(parse_expr("f(X=1, X)").is_ok()); // two arguments
        assert!(parse_expr("{(X=1, X)}").is_err());
    }

    #[test]
    fn arity_mismatch_and_head_mismatch() {
        let err = parse_program("f(X) -> X;\nf(X, Y) -> Y.").unwrap_err();
        assert!(err.to_string().contains("arity mismatch"), "{err}");
        assert_eq!(err.pos().line, 2);
        assert!(parse_program("f(X) -> X;\ng(X) -> X.").is_err());
        assert!(parse_program("f() -> 1.\nf() -> 2.").is_err());
    }

    #[test]
    fn guards_are_restricted() {
        assert!(parse_program("f(X) when g(X) -> 1.").is_err());
        assert!(parse_program("f(X) when X == self() -> 1.").is_err());
        assert!(parse_program("f(X) when is_integer(X), X > 0; X == a -> 1.").is_ok());
    }

    #[test]
    fn module_headers() {
        let p = parse_program("-module(shop).\n-export([main/0]).\nmain() -> ok.\n-module(other).\nmain() -> ok.")
            .unwrap();
        assert_eq!(p.modules.len(), 2);
        assert_eq!(p.modules[0].name.as_str(), "shop");
        assert!(parse_program("-record(r, {a}).").is_err());
    }

    #[test]
    fn error_reports_expected_set() {
        let err = parse_program("f( -> 1.").unwrap_err();
        assert!(!err.expected().is_empty());
        assert_eq!((err.pos().line, err.pos().col), (1, 4));
    }
}
