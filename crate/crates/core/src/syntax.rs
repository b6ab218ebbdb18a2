//! S-expression reader for the space text format.
//!
//! Tokens are separated by whitespace and parentheses, `;` starts a line
//! comment, `$name` is a variable, and string literals use double quotes
//! with `\"` and `\\` escapes. Numbers, strings and registered grounded
//! function names read as grounded labels; everything else is a symbol.
//! `(!enrich "<kind>" <base64> <expr>)` attaches an enrichment to `<expr>`.

use std::collections::BTreeSet;
use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use thiserror::Error;

use crate::space::{Enrichment, Expression, Label};

/// Names the default reader treats as grounded functions.
pub const CORE_GROUNDED: &[&str] = &[
    "+",
    "-",
    "*",
    "/",
    "%",
    "<",
    ">",
    "<=",
    ">=",
    "==",
    "concat",
    "str-len",
    "quote",
    "match",
    "transform",
    "matchEV",
];

pub const ENRICH_DIRECTIVE: &str = "!enrich";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
    Str(String),
}

fn error(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };
    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        match c {
            c if c.is_whitespace() => {
                chars.next();
                advance(c, &mut pos);
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    advance(c, &mut pos);
                }
            }
            '(' | ')' => {
                chars.next();
                advance(c, &mut pos);
                out.push((if c == '(' { Tok::Open } else { Tok::Close }, start));
            }
            '"' => {
                chars.next();
                advance(c, &mut pos);
                let mut s = String::new();
                loop {
                    let Some(c) = chars.next() else {
                        return Err(error(start, "unterminated string literal"));
                    };
                    advance(c, &mut pos);
                    match c {
                        '"' => break,
                        '\\' => {
                            let esc_pos = pos;
                            match chars.next() {
                                Some(e @ ('"' | '\\')) => {
                                    advance(e, &mut pos);
                                    s.push(e);
                                }
                                Some(other) => return Err(error(esc_pos, format!("unknown escape `\\{other}`"))),
                                None => return Err(error(start, "unterminated string literal")),
                            }
                        }
                        c => s.push(c),
                    }
                }
                out.push((Tok::Str(s), start));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    advance(c, &mut pos);
                }
                out.push((Tok::Word(word), start));
            }
        }
    }
    Ok(out)
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Inverse of [`quote_string`] for canonical string labels.
pub fn unquote_string(label: &str) -> Option<String> {
    let body = label.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            out.push(chars.next()?);
        } else {
            out.push(c);
        }
    }
    Some(out)
}

pub fn is_number(token: &str) -> bool {
    let digits = token.strip_prefix('-').unwrap_or(token);
    let starts_numeric = digits.starts_with(|c: char| c.is_ascii_digit())
        || (digits.starts_with('.') && digits[1..].starts_with(|c: char| c.is_ascii_digit()));
    starts_numeric && (token.parse::<i64>().is_ok() || token.parse::<f64>().is_ok())
}

/// Reader configured with the set of grounded function names.
#[derive(Debug, Clone)]
pub struct Reader {
    grounded: BTreeSet<String>,
}

impl Default for Reader {
    fn default() -> Self {
        Reader::with_grounded(CORE_GROUNDED.iter().copied())
    }
}

impl Reader {
    pub fn with_grounded<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Reader {
            grounded: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_grounded_name(&self, name: &str) -> bool {
        self.grounded.contains(name)
    }

    fn classify(&self, word: &str, pos: Pos) -> Result<Label, ParseError> {
        if let Some(name) = word.strip_prefix('$') {
            if name.is_empty() {
                return Err(error(pos, "empty variable name"));
            }
            return Ok(Label::Variable(name.to_string()));
        }
        if is_number(word) || self.grounded.contains(word) {
            Ok(Label::Grounded(word.to_string()))
        } else {
            Ok(Label::Symbol(word.to_string()))
        }
    }

    /// Reads every top-level expression in `text`.
    pub fn parse_all(&self, text: &str) -> Result<Vec<Expression>, ParseError> {
        let toks = tokenize(text)?;
        let mut cursor = Cursor {
            toks: &toks,
            at: 0,
            end: end_pos(text),
        };
        let mut out = Vec::new();
        while !cursor.done() {
            out.push(self.read(&mut cursor)?);
        }
        Ok(out)
    }

    /// Reads exactly one expression.
    pub fn parse(&self, text: &str) -> Result<Expression, ParseError> {
        let toks = tokenize(text)?;
        let mut cursor = Cursor {
            toks: &toks,
            at: 0,
            end: end_pos(text),
        };
        if cursor.done() {
            return Err(error(cursor.end, "expected an expression"));
        }
        let expr = self.read(&mut cursor)?;
        if let Some((_, pos)) = cursor.peek() {
            return Err(error(*pos, "unexpected input after expression"));
        }
        Ok(expr)
    }

    fn read(&self, cursor: &mut Cursor<'_>) -> Result<Expression, ParseError> {
        let (tok, pos) = cursor.next()?;
        match tok {
            Tok::Close => Err(error(pos, "unexpected `)`")),
            Tok::Str(s) => Ok(Expression::grounded(quote_string(&s))),
            Tok::Word(w) => Ok(Expression::Atom(self.classify(&w, pos)?)),
            Tok::Open => {
                if matches!(cursor.peek(), Some((Tok::Word(w), _)) if w == ENRICH_DIRECTIVE) {
                    cursor.next()?;
                    return self.read_enrich(cursor, pos);
                }
                let mut items = Vec::new();
                loop {
                    match cursor.peek() {
                        None => return Err(error(pos, "unclosed `(`")),
                        Some((Tok::Close, _)) => {
                            cursor.next()?;
                            return Ok(Expression::List(items));
                        }
                        Some(_) => items.push(self.read(cursor)?),
                    }
                }
            }
        }
    }

    fn read_enrich(&self, cursor: &mut Cursor<'_>, open: Pos) -> Result<Expression, ParseError> {
        let (kind, kpos) = cursor.next()?;
        let Tok::Str(kind) = kind else {
            return Err(error(kpos, "!enrich expects a kind string"));
        };
        let (payload, ppos) = cursor.next()?;
        let Tok::Word(payload) = payload else {
            return Err(error(ppos, "!enrich expects a base64 payload"));
        };
        let bytes = BASE64
            .decode(payload.as_bytes())
            .map_err(|e| error(ppos, format!("invalid base64 payload: {e}")))?;
        let inner = self.read(cursor)?;
        if inner.enrichment().is_some() {
            return Err(error(open, "expression already carries an enrichment"));
        }
        match cursor.next()? {
            (Tok::Close, _) => Ok(inner.enriched(Enrichment::new(kind, bytes))),
            (_, pos) => Err(error(pos, "expected `)` to close !enrich")),
        }
    }
}

struct Cursor<'a> {
    toks: &'a [(Tok, Pos)],
    at: usize,
    end: Pos,
}

impl Cursor<'_> {
    fn done(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn peek(&self) -> Option<&(Tok, Pos)> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Result<(Tok, Pos), ParseError> {
        let t = self
            .toks
            .get(self.at)
            .cloned()
            .ok_or_else(|| error(self.end, "unexpected end of input"))?;
        self.at += 1;
        Ok(t)
    }
}

fn end_pos(text: &str) -> Pos {
    let line = text.matches('\n').count() + 1;
    let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Pos { line, column }
}

/// Parses one expression with the default reader.
pub fn parse(text: &str) -> Result<Expression, ParseError> {
    Reader::default().parse(text)
}

/// Parses all top-level expressions with the default reader.
pub fn parse_all(text: &str) -> Result<Vec<Expression>, ParseError> {
    Reader::default().parse_all(text)
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Open => f.write_str("("),
            Tok::Close => f.write_str(")"),
            Tok::Word(w) => f.write_str(w),
            Tok::Str(s) => f.write_str(&quote_string(s)),
        }
    }
}
