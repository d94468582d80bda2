//! Abstract syntax, parser and pretty printer for the Erlang subset.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod value;

pub use ast::*;
pub use parser::{is_guard_bif, parse_expr, parse_pattern, parse_program, DEFAULT_MODULE};
pub use pretty::{pretty_expr, pretty_pattern, pretty_program};
pub use value::{Closure, Pid, Value};

#[derive(Clone, Debug, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: {message}")]
    Lex { pos: Pos, message: String },
    #[error("{pos}: unexpected {found}, expected {}", expected.join(" or "))]
    Unexpected {
        pos: Pos,
        found: String,
        expected: Vec<String>,
    },
    #[error("{pos}: {message}")]
    Invalid { pos: Pos, message: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Lex { pos, .. }
            | ParseError::Unexpected { pos, .. }
            | ParseError::Invalid { pos, .. } => *pos,
        }
    }

    /// Tokens that would have been accepted at the error position.
    pub fn expected(&self) -> &[String] {
        match self {
            ParseError::Unexpected { expected, .. } => expected,
            _ => &[],
        }
    }
}
