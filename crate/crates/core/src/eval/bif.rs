//! Built-in operators and functions.

use std::cmp::Ordering;

use crate::syntax::{Op, Value};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BifError {
    #[error("bad argument in {0}")]
    Badarg(String),
    #[error("bad arithmetic expression in {0}")]
    Badarith(String),
    #[error("unsupported format directive ~{0}")]
    Format(char),
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Int(_) | Value::Float(_) => 0,
        Value::Atom(_) => 1,
        Value::Closure(_) => 2,
        Value::Pid(_) => 3,
        Value::Tuple(_) => 4,
        Value::Nil => 5,
        Value::Cons(..) => 6,
    }
}

/// Erlang term order, with integers and floats compared by numeric value.
pub fn compare(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.cmp(y),
        (Value::Int(x), Value::Float(y)) => (*x as f64).partial_cmp(y).unwrap_or(Ordering::Equal),
        (Value::Float(x), Value::Int(y)) => x.partial_cmp(&(*y as f64)).unwrap_or(Ordering::Equal),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        (Value::Atom(x), Value::Atom(y)) => x.as_str().cmp(y.as_str()),
        (Value::Pid(x), Value::Pid(y)) => x.cmp(y),
        (Value::Tuple(xs), Value::Tuple(ys)) => xs.len().cmp(&ys.len()).then_with(|| {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| compare(x, y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        }),
        (Value::Cons(h1, t1), Value::Cons(h2, t2)) => compare(h1, h2).then_with(|| compare(t1, t2)),
        (Value::Closure(f), Value::Closure(g)) => f
            .fun
            .arity()
            .cmp(&g.fun.arity())
            .then_with(|| format!("{f:?}").cmp(&format!("{g:?}"))),
        _ => rank(a).cmp(&rank(b)),
    }
}

fn num_op(
    op: Op,
    a: &Value,
    b: &Value,
    int: fn(i64, i64) -> Option<i64>,
    float: fn(f64, f64) -> f64,
) -> Result<Value, BifError> {
    let err = || BifError::Badarith(format!("{a} {} {b}", op.symbol()));
    let r = match (a, b) {
        (Value::Int(x), Value::Int(y)) => return int(*x, *y).map(Value::Int).ok_or_else(err),
        (Value::Int(x), Value::Float(y)) => float(*x as f64, *y),
        (Value::Float(x), Value::Int(y)) => float(*x, *y as f64),
        (Value::Float(x), Value::Float(y)) => float(*x, *y),
        _ => return Err(err()),
    };
    if r.is_finite() {
        Ok(Value::Float(r))
    } else {
        Err(err())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(x) => Some(*x),
        _ => None,
    }
}

fn boolean(op: Op, v: &Value) -> Result<bool, BifError> {
    v.as_bool()
        .ok_or_else(|| BifError::Badarg(format!("{} with {v}", op.symbol())))
}

/// Evaluate a strict operator on values. `andalso`/`orelse` are handled by
/// the evaluator because their right operand is evaluated lazily.
pub fn eval_op(op: Op, args: &[Value]) -> Result<Value, BifError> {
    match (op, args) {
        (Op::Add, [a, b]) => num_op(op, a, b, i64::checked_add, |x, y| x + y),
        (Op::Sub, [a, b]) => num_op(op, a, b, i64::checked_sub, |x, y| x - y),
        (Op::Mul, [a, b]) => num_op(op, a, b, i64::checked_mul, |x, y| x * y),
        (Op::Div, [a, b]) => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) if y != 0.0 => Ok(Value::Float(x / y)),
            _ => Err(BifError::Badarith(format!("{a} / {b}"))),
        },
        (Op::Rem, [Value::Int(x), Value::Int(y)]) => x
            .checked_rem(*y)
            .map(Value::Int)
            .ok_or_else(|| BifError::Badarith(format!("{x} rem {y}"))),
        (Op::Rem, [a, b]) => Err(BifError::Badarith(format!("{a} rem {b}"))),
        (Op::Eq, [a, b]) => Ok(Value::bool(compare(a, b).is_eq())),
        (Op::Ne, [a, b]) => Ok(Value::bool(compare(a, b).is_ne())),
        (Op::ExactEq, [a, b]) => Ok(Value::bool(a == b)),
        (Op::ExactNe, [a, b]) => Ok(Value::bool(a != b)),
        (Op::Lt, [a, b]) => Ok(Value::bool(compare(a, b).is_lt())),
        (Op::Le, [a, b]) => Ok(Value::bool(compare(a, b).is_le())),
        (Op::Gt, [a, b]) => Ok(Value::bool(compare(a, b).is_gt())),
        (Op::Ge, [a, b]) => Ok(Value::bool(compare(a, b).is_ge())),
        (Op::And, [a, b]) => Ok(Value::bool(boolean(op, a)? & boolean(op, b)?)),
        (Op::Or, [a, b]) => Ok(Value::bool(boolean(op, a)? | boolean(op, b)?)),
        (Op::Not, [a]) => Ok(Value::bool(!boolean(op, a)?)),
        (Op::Neg, [Value::Int(x)]) => x
            .checked_neg()
            .map(Value::Int)
            .ok_or_else(|| BifError::Badarith(format!("-{x}"))),
        (Op::Neg, [Value::Float(x)]) => Ok(Value::Float(-x)),
        (Op::Plus, [v @ (Value::Int(_) | Value::Float(_))]) => Ok(v.clone()),
        (Op::Neg | Op::Plus, [a]) => Err(BifError::Badarith(format!("{}{a}", op.symbol()))),
        (Op::Append, [a, b]) => {
            let items = a
                .as_list()
                .ok_or_else(|| BifError::Badarg(format!("{a} ++ {b}")))?;
            Ok(items
                .into_iter()
                .rev()
                .fold(b.clone(), |tail, h| Value::cons(h.clone(), tail)))
        }
        _ => Err(BifError::Badarg(format!(
            "{} applied to {} arguments",
            op.symbol(),
            args.len()
        ))),
    }
}

/// `erlang` functions callable without qualification (and in guards).
fn erlang_bif(name: &str, args: &[Value]) -> Option<Result<Value, BifError>> {
    let bad = || BifError::Badarg(format!("{name}/{}", args.len()));
    let r = match (name, args) {
        ("abs", [Value::Int(i)]) => i.checked_abs().map(Value::Int).ok_or_else(bad),
        ("abs", [Value::Float(x)]) => Ok(Value::Float(x.abs())),
        ("element", [Value::Int(n), Value::Tuple(vs)]) => usize::try_from(*n)
            .ok()
            .and_then(|n| n.checked_sub(1))
            .and_then(|i| vs.get(i).cloned())
            .ok_or_else(bad),
        ("hd", [Value::Cons(h, _)]) => Ok((**h).clone()),
        ("tl", [Value::Cons(_, t)]) => Ok((**t).clone()),
        ("length", [v]) => v
            .as_list()
            .map(|l| Value::Int(l.len() as i64))
            .ok_or_else(bad),
        ("tuple_size", [Value::Tuple(vs)]) => Ok(Value::Int(vs.len() as i64)),
        ("is_atom", [v]) => Ok(Value::bool(matches!(v, Value::Atom(_)))),
        ("is_float", [v]) => Ok(Value::bool(matches!(v, Value::Float(_)))),
        ("is_function", [v]) => Ok(Value::bool(matches!(v, Value::Closure(_)))),
        ("is_integer", [v]) => Ok(Value::bool(matches!(v, Value::Int(_)))),
        ("is_list", [v]) => Ok(Value::bool(matches!(v, Value::Nil | Value::Cons(..)))),
        ("is_number", [v]) => Ok(Value::bool(matches!(v, Value::Int(_) | Value::Float(_)))),
        ("is_pid", [v]) => Ok(Value::bool(matches!(v, Value::Pid(_)))),
        ("is_tuple", [v]) => Ok(Value::bool(matches!(v, Value::Tuple(_)))),
        (
            "abs" | "element" | "hd" | "tl" | "length" | "tuple_size" | "is_atom" | "is_float"
            | "is_function" | "is_integer" | "is_list" | "is_number" | "is_pid" | "is_tuple",
            _,
        ) => Err(bad()),
        _ => return None,
    };
    Some(r)
}

/// Evaluate a guard-safe built-in function.
pub fn guard_bif(name: &str, args: &[Value]) -> Option<Result<Value, BifError>> {
    erlang_bif(name, args)
}

/// Result of a built-in function call: its value plus any text it printed.
pub type BifResult = Result<(Value, Option<String>), BifError>;

/// Call a built-in function; `None` when `module:name/arity` is not one.
pub fn call_bif(module: Option<&str>, name: &str, args: &[Value]) -> Option<BifResult> {
    match module {
        None | Some("erlang") => erlang_bif(name, args).map(|r| r.map(|v| (v, None))),
        Some("io") if name == "format" => match args {
            [fmt] => Some(format(fmt, &Value::Nil)),
            [fmt, list] => Some(format(fmt, list)),
            _ => None,
        },
        _ => None,
    }
}

fn format(fmt: &Value, args: &Value) -> BifResult {
    let bad = || BifError::Badarg(format!("io:format({fmt}, {args})"));
    let text: String = match fmt {
        Value::Atom(a) => a.as_str().to_string(),
        Value::Nil => String::new(),
        v => v
            .as_list()
            .ok_or_else(bad)?
            .into_iter()
            .map(|c| match c {
                Value::Int(i) => u32::try_from(*i).ok().and_then(char::from_u32),
                _ => None,
            })
            .collect::<Option<String>>()
            .ok_or_else(bad)?,
    };
    let mut rest = args.as_list().ok_or_else(bad)?.into_iter();
    let mut out = String::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '~' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('p') => out.push_str(&rest.next().ok_or_else(bad)?.to_string()),
            Some('n') => out.push('\n'),
            Some('~') => out.push('~'),
            Some(d) => return Err(BifError::Format(d)),
            None => return Err(bad()),
        }
    }
    if rest.next().is_some() {
        return Err(bad());
    }
    Ok((Value::atom("ok"), Some(out)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(o: Op, a: Value, b: Value) -> Value {
        eval_op(o, &[a, b]).unwrap()
    }

    #[test]
    fn arithmetic() {
        assert_eq!(op(Op::Add, Value::Int(40), Value::Int(2)), Value::Int(42));
        assert_eq!(op(Op::Mul, Value::Int(5), Value::Int(24)), Value::Int(120));
        assert_eq!(op(Op::Div, Value::Int(3), Value::Int(2)), Value::Float(1.5));
        assert_eq!(op(Op::Rem, Value::Int(-7), Value::Int(2)), Value::Int(-1));
        assert!(eval_op(Op::Add, &[Value::Int(1), Value::atom("ok")]).is_err());
        assert!(eval_op(Op::Add, &[Value::Int(i64::MAX), Value::Int(1)]).is_err());
        assert!(eval_op(Op::Div, &[Value::Int(1), Value::Int(0)]).is_err());
    }

    #[test]
    fn comparisons_follow_term_order() {
        assert_eq!(op(Op::Ge, Value::Int(3), Value::Int(10)), Value::bool(false));
        assert_eq!(op(Op::Eq, Value::Int(1), Value::Float(1.0)), Value::bool(true));
        assert_eq!(op(Op::Lt, Value::Int(99), Value::atom("a")), Value::bool(true));
        assert_eq!(op(Op::Lt, Value::Nil, Value::string("a")), Value::bool(true));
        assert_eq!(
            op(Op::Lt, Value::Tuple(vec![Value::Int(9)]), Value::Tuple(vec![Value::Int(1), Value::Int(1)])),
            Value::bool(true)
        );
    }

    #[test]
    fn append_and_booleans() {
        let l = op(Op::Append, Value::string("ab"), Value::string("c"));
        assert_eq!(l, Value::string("abc"));
        assert!(eval_op(Op::And, &[Value::bool(true), Value::Int(1)]).is_err());
        assert_eq!(eval_op(Op::Not, &[Value::bool(false)]).unwrap(), Value::bool(true));
    }

    #[test]
    fn io_format_captures_output() {
        let (v, out) = call_bif(
            Some("io"),
            "format",
            &[Value::string("Stock: ~p~n"), Value::list([Value::Int(3)])],
        )
        .unwrap()
        .unwrap();
        assert!(v.is_atom("ok"));
        assert_eq!(out.as_deref(), Some("Stock: 3\n"));
        assert!(call_bif(Some("io"), "format", &[Value::string("~s"), Value::list([Value::Nil])])
            .unwrap()
            .is_err());
        assert!(call_bif(Some("lists"), "reverse", &[Value::Nil]).is_none());
    }
}
