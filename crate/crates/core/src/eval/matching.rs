//! Pattern matching, clause selection and guard evaluation.

use super::bif::{eval_op, guard_bif, BifError};
use super::Env;
use crate::syntax::{Clause, Expr, ExprKind, Guard, Literal, Op, Pattern, PatternKind, Value};

/// Match `pattern` (with the bindings of `env` applied) against `value`.
///
/// Returns only the new bindings σ.
pub fn match_pattern(pattern: &Pattern, value: &Value, env: &Env) -> Option<Env> {
    let mut sigma = Env::new();
    if bind(pattern, value, env, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

fn bind(p: &Pattern, v: &Value, env: &Env, sigma: &mut Env) -> bool {
    match (&p.kind, v) {
        (PatternKind::Var(x), _) if x.is_wildcard() => true,
        (PatternKind::Var(x), _) => match env.get(x).or_else(|| sigma.get(x)) {
            Some(bound) => bound == v,
            None => {
                sigma.insert(x.clone(), v.clone());
                true
            }
        },
        (PatternKind::Lit(l), _) => lit_matches(l, v),
        (PatternKind::Nil, Value::Nil) => true,
        (PatternKind::Tuple(ps), Value::Tuple(vs)) => {
            ps.len() == vs.len() && ps.iter().zip(vs).all(|(p, v)| bind(p, v, env, sigma))
        }
        (PatternKind::Cons(ph, pt), Value::Cons(vh, vt)) => {
            bind(ph, vh, env, sigma) && bind(pt, vt, env, sigma)
        }
        _ => false,
    }
}

fn lit_matches(l: &Literal, v: &Value) -> bool {
    match (l, v) {
        (Literal::Atom(a), Value::Atom(b)) => a == b,
        (Literal::Int(i), Value::Int(j)) => i == j,
        (Literal::Char(c), Value::Int(j)) => *c as i64 == *j,
        (Literal::Float(x), Value::Float(y)) => x == y,
        (Literal::Str(_), _) => &l.to_value() == v,
        _ => false,
    }
}

/// How clause patterns see the surrounding environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClauseMode {
    /// `case` and `receive`: variables bound in the environment must match
    /// their current values.
    Case,
    /// Function heads: patterns introduce fresh variables that shadow the
    /// environment.
    Fun,
}

/// A selected clause: the extended environment, its body and its index.
#[derive(Clone, Debug)]
pub struct Selected<'a> {
    pub env: Env,
    pub body: &'a Expr,
    pub index: usize,
}

/// Select the first clause, top to bottom, whose patterns match `args` and
/// whose guard evaluates to `true`.
pub fn match_clauses<'a>(
    mode: ClauseMode,
    clauses: &'a [Clause],
    env: &Env,
    args: &[Value],
) -> Option<Selected<'a>> {
    let empty = Env::new();
    let pattern_env = match mode {
        ClauseMode::Case => env,
        ClauseMode::Fun => &empty,
    };
    clauses.iter().enumerate().find_map(|(index, c)| {
        if c.patterns.len() != args.len() {
            return None;
        }
        let mut sigma = Env::new();
        let ok = c
            .patterns
            .iter()
            .zip(args)
            .all(|(p, v)| bind(p, v, pattern_env, &mut sigma));
        if !ok {
            return None;
        }
        let extended = env.overlay(&sigma);
        if let Some(g) = &c.guard {
            if !guard_holds(g, &extended) {
                return None;
            }
        }
        Some(Selected {
            env: extended,
            body: &c.body,
            index,
        })
    })
}

/// Index of the first guard that evaluates to `true`.
pub fn eval_guard<'a>(guards: impl IntoIterator<Item = &'a Guard>, env: &Env) -> Option<usize> {
    guards.into_iter().position(|g| guard_holds(g, env))
}

/// A guard sequence holds when every test of some alternative is `true`.
/// Evaluation errors make the test false.
pub fn guard_holds(g: &Guard, env: &Env) -> bool {
    g.alternatives.iter().any(|alt| {
        alt.iter()
            .all(|t| matches!(eval_pure(t, env), Ok(v) if v.is_atom("true")))
    })
}

/// Evaluate a side-effect free expression (guard tests) directly.
pub fn eval_pure(e: &Expr, env: &Env) -> Result<Value, BifError> {
    match &e.kind {
        ExprKind::Lit(l) => Ok(l.to_value()),
        ExprKind::Value(v) => Ok(v.clone()),
        ExprKind::Nil => Ok(Value::Nil),
        ExprKind::Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| BifError::Badarg(format!("unbound variable {x}"))),
        ExprKind::Tuple(es) => es
            .iter()
            .map(|e| eval_pure(e, env))
            .collect::<Result<_, _>>()
            .map(Value::Tuple),
        ExprKind::Cons(h, t) => Ok(Value::cons(eval_pure(h, env)?, eval_pure(t, env)?)),
        ExprKind::Op(Op::AndAlso, args) => match eval_pure(&args[0], env)?.as_bool() {
            Some(true) => eval_pure(&args[1], env),
            Some(false) => Ok(Value::bool(false)),
            None => Err(BifError::Badarg("andalso".into())),
        },
        ExprKind::Op(Op::OrElse, args) => match eval_pure(&args[0], env)?.as_bool() {
            Some(true) => Ok(Value::bool(true)),
            Some(false) => eval_pure(&args[1], env),
            None => Err(BifError::Badarg("orelse".into())),
        },
        ExprKind::Op(op, args) => {
            let vs = args
                .iter()
                .map(|e| eval_pure(e, env))
                .collect::<Result<Vec<_>, _>>()?;
            eval_op(*op, &vs)
        }
        ExprKind::Call {
            module,
            callee,
            args,
            ..
        } if module.as_ref().is_none_or(|m| m.as_str() == "erlang") => {
            let ExprKind::Lit(Literal::Atom(name)) = &callee.kind else {
                return Err(BifError::Badarg("call in guard".into()));
            };
            let vs = args
                .iter()
                .map(|e| eval_pure(e, env))
                .collect::<Result<Vec<_>, _>>()?;
            guard_bif(name.as_str(), &vs)
                .unwrap_or_else(|| Err(BifError::Badarg(format!("{name}/{} in guard", vs.len()))))
        }
        _ => Err(BifError::Badarg(format!("{e} in guard"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_pattern, parse_program, Var};

    fn val(src: &str) -> Value {
        eval_pure(&parse_expr(src).unwrap(), &Env::new()).unwrap()
    }

    #[test]
    fn patterns() {
        let p = parse_pattern("{X,Y}").unwrap();
        let s = match_pattern(&p, &val("{ok,42}"), &Env::new()).unwrap();
        assert_eq!(s.get(&Var::new("X")), Some(&Value::atom("ok")));
        assert_eq!(s.get(&Var::new("Y")), Some(&Value::Int(42)));
        assert!(match_pattern(&parse_pattern("0").unwrap(), &Value::Int(0), &Env::new())
            .unwrap()
            .is_empty());
        assert!(match_pattern(&parse_pattern("[H|T]").unwrap(), &Value::Nil, &Env::new()).is_none());
        assert!(match_pattern(&parse_pattern("{A,A}").unwrap(), &val("{1,2}"), &Env::new()).is_none());
        assert!(match_pattern(&parse_pattern("1").unwrap(), &Value::Float(1.0), &Env::new()).is_none());
        let bound: Env = [(Var::new("A"), Value::Int(1))].into_iter().collect();
        assert!(match_pattern(&parse_pattern("{A,_}").unwrap(), &val("{2,2}"), &bound).is_none());
        assert!(match_pattern(&parse_pattern("\"hi\"").unwrap(), &Value::string("hi"), &bound).is_some());
    }

    fn server_clauses() -> Vec<Clause> {
        let p = parse_program(
            "server(N) -> receive {add,M} -> server(N+M); {del,M,C} when N>=M -> K = N-M, C ! K, server(K); stop -> ok end.",
        )
        .unwrap();
        let body = &p.modules[0].functions[0].clauses[0].body;
        let ExprKind::Receive(cls) = &body.kind else { panic!() };
        cls.clone()
    }

    #[test]
    fn receive_clause_selection() {
        let cls = server_clauses();
        let env: Env = [(Var::new("N"), Value::Int(0))].into_iter().collect();
        let sel = match_clauses(ClauseMode::Case, &cls, &env, &[val("{add,3}")]).unwrap();
        assert_eq!(sel.index, 0);
        assert_eq!(sel.env.get(&Var::new("M")), Some(&Value::Int(3)));
        assert_eq!(sel.body.to_string(), "server(N + M)");
        let env: Env = [(Var::new("N"), Value::Int(3))].into_iter().collect();
        assert!(match_clauses(ClauseMode::Case, &cls, &env, &[val("{del,10,c}")]).is_none());
    }

    #[test]
    fn guards() {
        let g = |s: &str| Guard::single(parse_expr(s).unwrap());
        let env: Env = [(Var::new("N"), Value::Int(5))].into_iter().collect();
        assert_eq!(eval_guard(&[g("false"), g("true")], &env), Some(1));
        assert_eq!(eval_guard(&[g("N > 0")], &env), Some(0));
        let zero: Env = [(Var::new("N"), Value::Int(0))].into_iter().collect();
        assert_eq!(eval_guard(&[g("N > 0")], &zero), None);
        // A type error inside a guard is a false guard.
        assert_eq!(eval_guard(&[g("N + a > 0"), g("true")], &env), Some(1));
    }

    #[test]
    fn wildcard_clause_always_matches() {
        let p = parse_program("f(X) -> case X of _ -> ok end.").unwrap();
        let ExprKind::Case(_, cls) = &p.modules[0].functions[0].clauses[0].body.kind else { panic!() };
        let sel = match_clauses(ClauseMode::Case, cls, &Env::new(), &[Value::Int(7)]).unwrap();
        assert_eq!(sel.index, 0);
    }
}
