//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := atom ('^' factor)?            (right associative)
//! atom    := number | 'pi' | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Numbers are decimal literals with optional fraction and exponent.
//! Variables resolve against the chart's coordinate names; the canonical
//! names are `x1..xn`.

use super::{Expr, UnaryFn};
use crate::error::{Error, Result};

pub fn parse_expr(text: &str, n_vars: usize) -> Result<Expr> {
    let names: Vec<String> = (1..=n_vars).map(|i| format!("x{i}")).collect();
    parse_expr_with_names(text, &names)
}

pub fn parse_expr_with_names(text: &str, names: &[String]) -> Result<Expr> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        names,
        text_len: text.len(),
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(t) => Err(Error::Syntax {
            offset: t.offset,
            message: format!("unexpected trailing input `{}`", t.kind.describe()),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("{v}"),
            TokKind::Ident(s) => s.clone(),
            TokKind::Plus => "+".into(),
            TokKind::Minus => "-".into(),
            TokKind::Star => "*".into(),
            TokKind::Slash => "/".into(),
            TokKind::Caret => "^".into(),
            TokKind::LParen => "(".into(),
            TokKind::RParen => ")".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let offset = i;
        let kind = match c {
            '+' => {
                i += 1;
                TokKind::Plus
            }
            '-' => {
                i += 1;
                TokKind::Minus
            }
            '*' => {
                i += 1;
                TokKind::Star
            }
            '/' => {
                i += 1;
                TokKind::Slash
            }
            '^' => {
                i += 1;
                TokKind::Caret
            }
            '(' => {
                i += 1;
                TokKind::LParen
            }
            ')' => {
                i += 1;
                TokKind::RParen
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{s}`"),
                })?;
                TokKind::Num(v)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                TokKind::Ident(text[start..i].to_string())
            }
            other => {
                return Err(Error::Syntax {
                    offset,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push(Tok { kind, offset });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    names: &'a [String],
    text_len: usize,
}

const FUNCS: &[(&str, UnaryFn)] = &[
    ("sin", UnaryFn::Sin),
    ("cos", UnaryFn::Cos),
    ("tan", UnaryFn::Tan),
    ("sinh", UnaryFn::Sinh),
    ("cosh", UnaryFn::Cosh),
    ("tanh", UnaryFn::Tanh),
    ("exp", UnaryFn::Exp),
    ("ln", UnaryFn::Ln),
    ("sqrt", UnaryFn::Sqrt),
    ("abs", UnaryFn::Abs),
];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokKind) -> bool {
        if let Some(t) = self.peek() {
            if &t.kind == kind {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect(&mut self, kind: TokKind) -> Result<()> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(Error::Syntax {
                offset: t.offset,
                message: format!("expected `{}`, found `{}`", kind.describe(), t.kind.describe()),
            }),
            None => Err(Error::Syntax {
                offset: self.text_len,
                message: format!("expected `{}`, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(&TokKind::Plus) {
                acc = Expr::add(acc, self.term()?);
            } else if self.eat(&TokKind::Minus) {
                acc = Expr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(&TokKind::Star) {
                acc = Expr::mul(acc, self.factor()?);
            } else if self.eat(&TokKind::Slash) {
                acc = Expr::div(acc, self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(&TokKind::Minus) {
            return Ok(Expr::neg(self.factor()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(&TokKind::Caret) {
            let exponent = self.factor()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.next().ok_or(Error::Syntax {
            offset: self.text_len,
            message: "unexpected end of input".to_string(),
        })?;
        match t.kind {
            TokKind::Num(v) => Ok(Expr::Num(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(e)
            }
            TokKind::Ident(name) => {
                if let Some(&(_, f)) = FUNCS.iter().find(|(n, _)| *n == name) {
                    self.expect(TokKind::LParen)?;
                    let arg = self.expr()?;
                    self.expect(TokKind::RParen)?;
                    return Ok(Expr::unary(f, arg));
                }
                if name == "pi" || name == "PI" {
                    return Ok(Expr::Pi);
                }
                if let Some(i) = self.names.iter().position(|n| *n == name) {
                    return Ok(Expr::Var(i));
                }
                // `x<k>` beyond the chart dimension is a range error, anything
                // else an unknown identifier.
                if let Some(rest) = name.strip_prefix('x') {
                    if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                        return Err(Error::VarOutOfRange {
                            name,
                            offset: t.offset,
                            n_vars: self.names.len(),
                        });
                    }
                }
                Err(Error::UnknownIdent {
                    name,
                    offset: t.offset,
                })
            }
            other => Err(Error::Syntax {
                offset: t.offset,
                message: format!("unexpected `{}`", other.describe()),
            }),
        }
    }
}
