//! Minimal parenthesized-expression reader and printer.
//!
//! Only what instance files and program listings need: symbols, integers,
//! lists, and `;` line comments.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub enum Sexp {
    Symbol(String, Pos),
    Int(i64, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Symbol(_, p) | Sexp::Int(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            _ => None,
        }
    }

    /// For a list whose head is a symbol, returns `(head, rest)`.
    pub fn as_form(&self) -> Option<(&str, &[Sexp])> {
        let items = self.as_list()?;
        let (head, rest) = items.split_first()?;
        Some((head.as_symbol()?, rest))
    }
}

/// Structural equality, ignoring source positions.
impl PartialEq for Sexp {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Sexp::Symbol(a, _), Sexp::Symbol(b, _)) => a == b,
            (Sexp::Int(a, _), Sexp::Int(b, _)) => a == b,
            (Sexp::List(a, _), Sexp::List(b, _)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Symbol(s, _) => f.write_str(s),
            Sexp::Int(v, _) => write!(f, "{v}"),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntaxError {
    #[error("{0}: unexpected `)`")]
    UnexpectedClose(Pos),
    #[error("{0}: unclosed `(`")]
    Unclosed(Pos),
    #[error("unexpected end of input")]
    Eof,
    #[error("{0}: trailing input after expression")]
    Trailing(Pos),
    #[error("{pos}: unexpected character {ch:?}")]
    BadChar { pos: Pos, ch: char },
}

impl SyntaxError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            SyntaxError::UnexpectedClose(p)
            | SyntaxError::Unclosed(p)
            | SyntaxError::Trailing(p)
            | SyntaxError::BadChar { pos: p, .. } => Some(*p),
            SyntaxError::Eof => None,
        }
    }
}

#[derive(Debug)]
enum Token {
    Open,
    Close,
    Word(String),
}

fn tokenize(src: &str) -> Result<Vec<(Token, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
                continue;
            }
            '(' => {
                chars.next();
                out.push((Token::Open, pos));
            }
            ')' => {
                chars.next();
                out.push((Token::Close, pos));
            }
            c if is_word_char(c) => {
                let mut w = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    w.push(c);
                    chars.next();
                    col += 1;
                }
                out.push((Token::Word(w), pos));
                continue;
            }
            ch => return Err(SyntaxError::BadChar { pos, ch }),
        }
        col += 1;
    }
    Ok(out)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || "-_?*+./<>=!:".contains(c)
}

fn word_to_sexp(w: String, pos: Pos) -> Sexp {
    match w.parse::<i64>() {
        Ok(v) => Sexp::Int(v, pos),
        Err(_) => Sexp::Symbol(w, pos),
    }
}

/// Parses every top-level expression in `src`.
pub fn parse_all(src: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let tokens = tokenize(src)?;
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    for (tok, pos) in tokens {
        let done = match tok {
            Token::Open => {
                stack.push((Vec::new(), pos));
                None
            }
            Token::Close => {
                let (items, open) = stack.pop().ok_or(SyntaxError::UnexpectedClose(pos))?;
                Some(Sexp::List(items, open))
            }
            Token::Word(w) => Some(word_to_sexp(w, pos)),
        };
        if let Some(e) = done {
            match stack.last_mut() {
                Some((items, _)) => items.push(e),
                None => top.push(e),
            }
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(SyntaxError::Unclosed(open));
    }
    Ok(top)
}

/// Parses exactly one expression.
pub fn parse(src: &str) -> Result<Sexp, SyntaxError> {
    let mut all = parse_all(src)?.into_iter();
    let first = all.next().ok_or(SyntaxError::Eof)?;
    if let Some(extra) = all.next() {
        return Err(SyntaxError::Trailing(extra.pos()));
    }
    Ok(first)
}
