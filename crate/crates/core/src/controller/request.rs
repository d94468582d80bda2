//! Text syntax of debugger requests.

use super::{Goal, Request};
use crate::reversible::Direction;
use crate::syntax::{lexer::is_reserved, Pid, Var};
use crate::system::MsgId;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RequestError {
    #[error("empty request")]
    Empty,
    #[error("unknown request {0:?}")]
    Unknown(String),
    #[error("usage: {0}")]
    Usage(&'static str),
    #[error("bad {what} {text:?}")]
    BadArgument { what: &'static str, text: String },
    #[error("variable requests are backward only; use roll-var")]
    ForwardVariable,
}

fn pid(text: &str) -> Result<Pid, RequestError> {
    text.parse().map_err(|_| RequestError::BadArgument {
        what: "pid",
        text: text.to_string(),
    })
}

fn msg(text: &str) -> Result<MsgId, RequestError> {
    let digits = text.strip_prefix('ℓ').or_else(|| text.strip_prefix('l')).unwrap_or(text);
    digits.parse().map(MsgId).map_err(|_| RequestError::BadArgument {
        what: "message label",
        text: text.to_string(),
    })
}

fn count(text: Option<&str>) -> Result<usize, RequestError> {
    match text {
        None => Ok(1),
        Some(t) => match t.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(RequestError::BadArgument {
                what: "step count",
                text: t.to_string(),
            }),
        },
    }
}

fn var(text: &str) -> Result<Var, RequestError> {
    let ok = text.chars().next().is_some_and(|c| c.is_ascii_uppercase() || c == '_')
        && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '@')
        && !is_reserved(text);
    if ok {
        Ok(Var::new(text))
    } else {
        Err(RequestError::BadArgument {
            what: "variable",
            text: text.to_string(),
        })
    }
}

/// Parse one request line. `step p n` and `back p n` expand into `n`
/// single-step requests.
pub fn parse_requests(line: &str) -> Result<Vec<Request>, RequestError> {
    use Direction::{Backward, Forward};
    let words: Vec<&str> = line.split_whitespace().collect();
    let Some((&cmd, args)) = words.split_first() else {
        return Err(RequestError::Empty);
    };
    let one = |p: Pid, goal: Goal, dir| Ok(vec![Request::new(p, goal, dir)]);
    match (cmd, args) {
        ("step" | "back", [p] | [p, _]) => {
            let n = count(args.get(1).copied())?;
            let dir = if cmd == "step" { Forward } else { Backward };
            Ok(vec![Request::new(pid(p)?, Goal::Step, dir); n])
        }
        ("step", _) => Err(RequestError::Usage("step PID [N]")),
        ("back", _) => Err(RequestError::Usage("back PID [N]")),
        ("replay-send", [p, l]) => one(pid(p)?, Goal::Send(msg(l)?), Forward),
        ("replay-rec", [p, l]) => one(pid(p)?, Goal::Rec(msg(l)?), Forward),
        ("replay-spawn", [p, c]) => one(pid(p)?, Goal::Spawn(pid(c)?), Forward),
        ("roll-send", [p, l]) => one(pid(p)?, Goal::Send(msg(l)?), Backward),
        ("roll-rec", [p, l]) => one(pid(p)?, Goal::Rec(msg(l)?), Backward),
        ("roll-spawn", [p, c]) => one(pid(p)?, Goal::Spawn(pid(c)?), Backward),
        ("roll-var", [p, x]) => one(pid(p)?, Goal::Var(var(x)?), Backward),
        ("roll-creation", [p]) => one(pid(p)?, Goal::Creation, Backward),
        ("replay-var", _) => Err(RequestError::ForwardVariable),
        ("replay-send" | "roll-send", _) => Err(RequestError::Usage("replay-send|roll-send PID MSG")),
        ("replay-rec" | "roll-rec", _) => Err(RequestError::Usage("replay-rec|roll-rec PID MSG")),
        ("replay-spawn" | "roll-spawn", _) => Err(RequestError::Usage("replay-spawn|roll-spawn PID CHILD")),
        ("roll-var", _) => Err(RequestError::Usage("roll-var PID VAR")),
        ("roll-creation", _) => Err(RequestError::Usage("roll-creation PID")),
        _ => Err(RequestError::Unknown(cmd.to_string())),
    }
}
