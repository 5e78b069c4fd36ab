//! Process expressions.
//!
//! ```text
//! term := NAME | term ";" term | term "*" term
//!       | "mix(" NUMBER "," term "," term ")" | "(" term ")"
//! ```
//!
//! `f ; g` applies `f` then `g`; `*` places terms side by side. `;` binds
//! tighter than `*` and both associate to the left. `NUMBER` is a decimal
//! or `p/q` in `[0, 1]`. `mix` is reserved.

use std::fmt;

use procgpt_core::scalar::parse_rational;
use procgpt_core::{Bindings, DiagramTerm, Scalar, Signature, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Position, msg: String },

    #[error("type mismatch at {pos} in `{op}`: {left} does not match {right} ({detail})")]
    TypeMismatch { pos: Position, op: &'static str, left: String, right: String, detail: String },

    #[error("unbound generator `{name}` at {pos}")]
    Unbound { pos: Position, name: String },

    #[error("invalid mixture weight at {pos}: {msg}")]
    Weight { pos: Position, msg: String },
}

impl ExprError {
    pub fn position(&self) -> Position {
        match self {
            ExprError::Syntax { pos, .. }
            | ExprError::TypeMismatch { pos, .. }
            | ExprError::Unbound { pos, .. }
            | ExprError::Weight { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Number(String),
    Semi,
    Star,
    Comma,
    Open,
    Close,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "`{n}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Open => f.write_str("`(`"),
            Tok::Close => f.write_str("`)`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn position_of(src: &str, offset: usize) -> Position {
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Position { offset, line, column }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b';' => Some(Tok::Semi),
            b'*' => Some(Tok::Star),
            b',' => Some(Tok::Comma),
            b'(' => Some(Tok::Open),
            b')' => Some(Tok::Close),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start));
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Name(src[start..i].to_string()), start));
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b'/') {
                i += 1;
            }
            out.push((Tok::Number(src[start..i].to_string()), start));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ExprError::Syntax { pos: position_of(src, start), msg: format!("unexpected character `{ch}`") });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a, S> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    at: usize,
    bindings: &'a Bindings<S>,
}

/// First wire where two signatures disagree, for error messages.
fn first_difference(left: &Signature, right: &Signature) -> String {
    let (l, r) = (left.wires(), right.wires());
    for k in 0..l.len().max(r.len()) {
        match (l.get(k), r.get(k)) {
            (Some(a), Some(b)) if a == b => continue,
            (a, b) => {
                let show = |t: Option<&procgpt_core::SystemType>| t.map_or("no wire".to_string(), ToString::to_string);
                return format!("wire {} is {} vs {}", k + 1, show(a), show(b));
            }
        }
    }
    "signatures agree".into()
}

impl<S: Scalar> Parser<'_, S> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Position {
        position_of(self.src, self.toks[self.at].1)
    }

    fn bump(&mut self) -> (Tok, Position) {
        let p = self.pos();
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        (t, p)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        let (t, pos) = self.bump();
        if t == want {
            Ok(())
        } else {
            Err(ExprError::Syntax { pos, msg: format!("expected {want}, found {t}") })
        }
    }

    fn parallel(&mut self) -> Result<DiagramTerm, ExprError> {
        let mut acc = self.sequence()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = DiagramTerm::par(acc, self.sequence()?);
        }
        Ok(acc)
    }

    fn sequence(&mut self) -> Result<DiagramTerm, ExprError> {
        let mut acc = self.atom()?;
        while *self.peek() == Tok::Semi {
            let (_, pos) = self.bump();
            let next = self.atom()?;
            if acc.outputs() != next.inputs() {
                return Err(ExprError::TypeMismatch {
                    pos,
                    op: ";",
                    left: acc.outputs().to_string(),
                    right: next.inputs().to_string(),
                    detail: first_difference(acc.outputs(), next.inputs()),
                });
            }
            acc = DiagramTerm::seq(acc, next).expect("signatures checked");
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<DiagramTerm, ExprError> {
        let (t, pos) = self.bump();
        match t {
            Tok::Name(n) if n == "mix" => self.mixture(),
            Tok::Name(n) => DiagramTerm::leaf(&n, self.bindings).map_err(|_| ExprError::Unbound { pos, name: n }),
            Tok::Open => {
                let inner = self.parallel()?;
                self.expect(Tok::Close)?;
                Ok(inner)
            }
            other => Err(ExprError::Syntax { pos, msg: format!("expected a term, found {other}") }),
        }
    }

    fn mixture(&mut self) -> Result<DiagramTerm, ExprError> {
        self.expect(Tok::Open)?;
        let (t, pos) = self.bump();
        let Tok::Number(text) = t else {
            return Err(ExprError::Syntax { pos, msg: format!("expected a mixture weight, found {t}") });
        };
        let p = parse_rational(&text).ok_or_else(|| ExprError::Weight { pos, msg: format!("`{text}` is not a number") })?;
        let w = Weight::new(p).map_err(|e| ExprError::Weight { pos, msg: e.to_string() })?;
        self.expect(Tok::Comma)?;
        let a = self.parallel()?;
        let comma = self.pos();
        self.expect(Tok::Comma)?;
        let b = self.parallel()?;
        self.expect(Tok::Close)?;
        if a.inputs() != b.inputs() || a.outputs() != b.outputs() {
            let (l, r) = (format!("{} -> {}", a.inputs(), a.outputs()), format!("{} -> {}", b.inputs(), b.outputs()));
            let detail = if a.inputs() != b.inputs() {
                format!("inputs: {}", first_difference(a.inputs(), b.inputs()))
            } else {
                format!("outputs: {}", first_difference(a.outputs(), b.outputs()))
            };
            return Err(ExprError::TypeMismatch { pos: comma, op: "mix", left: l, right: r, detail });
        }
        Ok(DiagramTerm::mix(w, a, b).expect("signatures checked"))
    }
}

/// Parses and types `src` against `bindings`.
pub fn parse_process_expr<S: Scalar>(src: &str, bindings: &Bindings<S>) -> Result<DiagramTerm, ExprError> {
    let mut p = Parser { src, toks: lex(src)?, at: 0, bindings };
    let term = p.parallel()?;
    let (t, pos) = p.bump();
    if t != Tok::End {
        return Err(ExprError::Syntax { pos, msg: format!("unexpected {t} after a complete term") });
    }
    Ok(term)
}

/// Canonical text of a term: minimal parentheses, single spaces.
pub fn print_process_expr(term: &DiagramTerm) -> String {
    term.to_string()
}
