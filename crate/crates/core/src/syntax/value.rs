use std::fmt;
use std::sync::Arc;

use super::ast::{Atom, FunExpr};
use crate::eval::Env;

/// Process identifier, rendered as `<0.N.0>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pid(pub u64);

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<0.{}.0>", self.0)
    }
}

impl std::str::FromStr for Pid {
    type Err = String;

    /// Accepts `<0.N.0>`, `pN` or a bare `N`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let num = if let Some(inner) = s.strip_prefix("<0.").and_then(|r| r.strip_suffix(".0>")) {
            inner
        } else if let Some(rest) = s.strip_prefix('p') {
            rest
        } else {
            s
        };
        num.parse::<u64>()
            .map(Pid)
            .map_err(|_| format!("not a pid: {s}"))
    }
}

impl serde::Serialize for Pid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Pid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        // Only the canonical rendering is accepted in files.
        match text.strip_prefix("<0.").and_then(|r| r.strip_suffix(".0>")) {
            Some(n) => n.parse().map(Pid).map_err(serde::de::Error::custom),
            None => Err(serde::de::Error::custom(format!("malformed pid {text:?}"))),
        }
    }
}

/// A closure: the anonymous function together with the bindings of its free
/// variables at the time it was evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct Closure {
    pub env: Env,
    pub fun: Arc<FunExpr>,
}

/// Ground terms.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Atom(Atom),
    Int(i64),
    Float(f64),
    Tuple(Vec<Value>),
    Nil,
    Cons(Box<Value>, Box<Value>),
    Pid(Pid),
    Closure(Arc<Closure>),
}

impl Value {
    pub fn atom(name: &str) -> Self {
        Value::Atom(Atom::new(name))
    }

    pub fn cons(head: Value, tail: Value) -> Self {
        Value::Cons(Box::new(head), Box::new(tail))
    }

    pub fn list(items: impl IntoIterator<Item = Value, IntoIter: DoubleEndedIterator>) -> Self {
        items
            .into_iter()
            .rev()
            .fold(Value::Nil, |tail, head| Value::cons(head, tail))
    }

    /// Strings are lists of character codes.
    pub fn string(s: &str) -> Self {
        let codes: Vec<Value> = s.chars().map(|c| Value::Int(c as i64)).collect();
        Value::list(codes)
    }

    pub fn bool(b: bool) -> Self {
        Value::atom(if b { "true" } else { "false" })
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Atom(a) if a.as_str() == "true" => Some(true),
            Value::Atom(a) if a.as_str() == "false" => Some(false),
            _ => None,
        }
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Value::Atom(a) if a.as_str() == name)
    }

    /// Elements of a proper list, or `None` for improper lists and non-lists.
    pub fn as_list(&self) -> Option<Vec<&Value>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Value::Nil => return Some(out),
                Value::Cons(h, t) => {
                    out.push(&**h);
                    cur = t;
                }
                _ => return None,
            }
        }
    }

    /// The string a printable character list denotes.
    pub fn as_printable_string(&self) -> Option<String> {
        let items = self.as_list()?;
        if items.is_empty() {
            return None;
        }
        items
            .into_iter()
            .map(|v| match v {
                Value::Int(c) if (32..127).contains(c) || *c == 10 || *c == 9 => {
                    char::from_u32(*c as u32)
                }
                _ => None,
            })
            .collect()
    }

    pub fn pids(&self, out: &mut Vec<Pid>) {
        match self {
            Value::Pid(p) => out.push(*p),
            Value::Tuple(vs) => vs.iter().for_each(|v| v.pids(out)),
            Value::Cons(h, t) => {
                h.pids(out);
                t.pids(out);
            }
            Value::Closure(c) => c.env.values().for_each(|v| v.pids(out)),
            _ => {}
        }
    }
}

pub(crate) fn write_float(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    let text = format!("{x}");
    if text.contains('.') || text.contains('e') || !x.is_finite() {
        f.write_str(&text)
    } else {
        write!(f, "{text}.0")
    }
}

pub(crate) fn write_string_literal(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => write!(f, "{a}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write_float(f, *x),
            Value::Pid(p) => write!(f, "{p}"),
            Value::Closure(c) => write!(f, "#Fun<{}>", c.fun.arity()),
            Value::Tuple(vs) => {
                f.write_str("{")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            Value::Nil => f.write_str("[]"),
            Value::Cons(..) => {
                if let Some(s) = self.as_printable_string() {
                    return write_string_literal(f, &s);
                }
                f.write_str("[")?;
                let mut cur = self;
                let mut first = true;
                loop {
                    match cur {
                        Value::Cons(h, t) => {
                            if !first {
                                f.write_str(",")?;
                            }
                            first = false;
                            write!(f, "{h}")?;
                            cur = t;
                        }
                        Value::Nil => break,
                        tail => {
                            write!(f, "|{tail}")?;
                            break;
                        }
                    }
                }
                f.write_str("]")
            }
        }
    }
}
