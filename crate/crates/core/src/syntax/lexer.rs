use std::fmt;

use super::ast::Pos;
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Atom(String),
    Var(String),
    Int(i64),
    Float(f64),
    Char(char),
    Str(String),
    /// Reserved words: `case`, `of`, `end`, `rem`, `andalso`, ...
    Kw(&'static str),
    /// Punctuation and symbolic operators.
    Sym(&'static str),
    /// The terminating `.` of a form.
    Dot,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Atom(a) => write!(f, "atom '{a}'"),
            Tok::Var(v) => write!(f, "variable {v}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Float(x) => write!(f, "float {x}"),
            Tok::Char(c) => write!(f, "char ${c}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Kw(k) => write!(f, "'{k}'"),
            Tok::Sym(s) => write!(f, "'{s}'"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const KEYWORDS: &[&str] = &[
    "after", "and", "andalso", "band", "begin", "bnot", "bor", "bsl", "bsr", "bxor", "case",
    "catch", "cond", "div", "end", "fun", "if", "let", "not", "of", "or", "orelse", "receive",
    "rem", "try", "when", "xor",
];

pub fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

// Longest first so that greedy matching works.
const SYMBOLS: &[&str] = &[
    "=:=", "=/=", "->", "++", "--", "==", "/=", "=<", ">=", "<-", "||", "(", ")", "{", "}", "[",
    "]", ",", ";", "|", "!", "=", ":", "+", "-", "*", "/", "<", ">",
];

/// Tokenizes standard Erlang lexical syntax: `%` comments, quoted atoms,
/// strings with escapes, `$c` characters, integers (including `Base#Digits`)
/// and floats.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        chars: src.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn err(&self, pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError::Lex {
            pos,
            message: msg.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let pos = self.pos();
            let Some(c) = self.peek(0) else {
                out.push(Token { tok: Tok::Eof, pos });
                return Ok(out);
            };
            let tok = if c.is_ascii_lowercase() {
                let word = self.word();
                match KEYWORDS.iter().find(|k| **k == word) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Atom(word),
                }
            } else if c.is_ascii_uppercase() || c == '_' {
                Tok::Var(self.word())
            } else if c.is_ascii_digit() {
                self.number(pos)?
            } else if c == '\'' {
                self.bump();
                Tok::Atom(self.quoted('\'', pos)?)
            } else if c == '"' {
                self.bump();
                Tok::Str(self.quoted('"', pos)?)
            } else if c == '$' {
                self.bump();
                let ch = match self.bump() {
                    Some('\\') => self.escape(pos)?,
                    Some(ch) => ch,
                    None => return Err(self.err(pos, "unterminated character literal")),
                };
                Tok::Char(ch)
            } else if c == '.' && self.peek(1).is_none_or(|n| n.is_whitespace() || n == '%') {
                self.bump();
                Tok::Dot
            } else if let Some(sym) = SYMBOLS.iter().find(|s| self.starts_with(s)) {
                for _ in 0..sym.chars().count() {
                    self.bump();
                }
                Tok::Sym(sym)
            } else {
                return Err(self.err(pos, format!("unexpected character {c:?}")));
            };
            out.push(Token { tok, pos });
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.peek(k) == Some(c))
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '@' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn digits(&mut self, radix: u32) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_digit(radix) {
                s.push(c);
                self.bump();
            } else if c == '_' && self.peek(1).is_some_and(|n| n.is_digit(radix)) {
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let int_part = self.digits(10);
        if self.peek(0) == Some('#') {
            self.bump();
            let radix: u32 = int_part
                .parse()
                .ok()
                .filter(|r| (2..=36).contains(r))
                .ok_or_else(|| self.err(pos, "invalid radix"))?;
            let ds = self.digits(radix);
            return i64::from_str_radix(&ds, radix)
                .map(Tok::Int)
                .map_err(|_| self.err(pos, "invalid based integer"));
        }
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            let frac = self.digits(10);
            let mut text = format!("{int_part}.{frac}");
            if matches!(self.peek(0), Some('e' | 'E')) {
                let sign_ok = matches!(self.peek(1), Some('+' | '-'))
                    && self.peek(2).is_some_and(|c| c.is_ascii_digit());
                if sign_ok || self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                    text.push('e');
                    if sign_ok {
                        text.push(self.bump().unwrap());
                    }
                    text.push_str(&self.digits(10));
                }
            }
            return text
                .parse()
                .map(Tok::Float)
                .map_err(|_| self.err(pos, "invalid float"));
        }
        int_part
            .parse()
            .map(Tok::Int)
            .map_err(|_| self.err(pos, "integer literal out of range"))
    }

    fn escape(&mut self, pos: Pos) -> Result<char, ParseError> {
        match self.bump() {
            Some('n') => Ok('\n'),
            Some('t') => Ok('\t'),
            Some('r') => Ok('\r'),
            Some('s') => Ok(' '),
            Some('e') => Ok('\x1b'),
            Some('0') => Ok('\0'),
            Some(c @ ('\\' | '\'' | '"')) => Ok(c),
            Some(c) => Ok(c),
            None => Err(self.err(pos, "unterminated escape")),
        }
    }

    fn quoted(&mut self, close: char, pos: Pos) -> Result<String, ParseError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(pos, "unterminated quoted literal")),
                Some('\\') => s.push(self.escape(pos)?),
                Some(c) if c == close => return Ok(s),
                Some(c) => s.push(c),
            }
        }
    }
}
