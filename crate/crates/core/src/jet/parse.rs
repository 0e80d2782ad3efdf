// SPDX-License-Identifier: Apache-2.0

//! Plain-text expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' '-'? integer)?
//! atom    := number | coordinate | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sqrt | sin | cos | tan | sinh | cosh | tanh
//! ```
//!
//! The printer emits the same grammar and parenthesizes by precedence, so
//! parsing printed output rebuilds a structurally equal field.

use std::fmt;

use super::{add, div, mul, neg, Func, Op, ScalarField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses `src`, resolving identifiers against the coordinate `names`.
pub fn parse<S: AsRef<str>>(src: &str, names: &[S]) -> Result<ScalarField, ParseError> {
    let mut p = Parser { src, pos: 0, names };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a, S> {
    src: &'a str,
    pos: usize,
    names: &'a [S],
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn error(&self, message: &str) -> ParseError {
        ParseError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ScalarField, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                let rhs = self.term()?;
                lhs = add(&lhs, &rhs);
            } else if self.eat('-') {
                let rhs = self.term()?;
                lhs = add(&lhs, &neg(&rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarField, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                let rhs = self.unary()?;
                lhs = mul(&lhs, &rhs);
            } else if self.eat('/') {
                let rhs = self.unary()?;
                lhs = div(&lhs, &rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarField, ParseError> {
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(neg(&inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarField, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat('-');
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits = &self.src[start..self.pos];
        let n: i32 = digits
            .parse()
            .map_err(|_| self.error("expected integer exponent"))?;
        Ok(base.powi(if negative { -n } else { n }))
    }

    fn atom(&mut self) -> Result<ScalarField, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
                    self.pos += self.peek().unwrap().len_utf8();
                }
                let ident = &self.src[start..self.pos];
                if let Some(i) = self.names.iter().position(|n| n.as_ref() == ident) {
                    return Ok(ScalarField::coordinate(i));
                }
                if let Some(func) = Func::from_name(ident) {
                    if !self.eat('(') {
                        return Err(self.error("expected '(' after function name"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.error("expected ')'"));
                    }
                    return Ok(arg.apply(func));
                }
                if ident == "pi" {
                    return Ok(ScalarField::constant(std::f64::consts::PI));
                }
                self.pos = start;
                Err(self.error(&format!("unknown identifier '{ident}'")))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<ScalarField, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits_start = self.pos;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits_start {
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(ScalarField::constant)
            .map_err(|_| ParseError {
                offset: start,
                message: "malformed number".into(),
            })
    }
}

// Precedence levels used by the printer.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const ATOM: u8 = 5;

pub(crate) struct Printer<'a> {
    pub(crate) field: &'a ScalarField,
    pub(crate) names: &'a [String],
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.field, self.names, 0)
    }
}

fn level(field: &ScalarField) -> u8 {
    match field.op() {
        Op::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => UNARY,
        Op::Const(_) | Op::Var(_) | Op::Func(..) | Op::Table(..) => ATOM,
        Op::Neg(_) => UNARY,
        Op::Add(..) => SUM,
        Op::Mul(..) | Op::Div(..) => PRODUCT,
        Op::Powi(..) => 4,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &ScalarField, names: &[String], min: u8) -> fmt::Result {
    let paren = level(e) < min;
    if paren {
        write!(f, "(")?;
    }
    match e.op() {
        Op::Const(c) => write!(f, "{c}")?,
        Op::Var(i) => match names.get(*i) {
            Some(n) => write!(f, "{n}")?,
            None => write!(f, "x{i}")?,
        },
        Op::Neg(a) => {
            write!(f, "-")?;
            write_expr(f, a, names, UNARY)?;
        }
        Op::Add(a, b) => {
            write_expr(f, a, names, SUM)?;
            match b.op() {
                Op::Neg(inner) => {
                    write!(f, " - ")?;
                    write_expr(f, inner, names, PRODUCT)?;
                }
                Op::Const(c) if *c < 0.0 => write!(f, " - {}", -c)?,
                _ => {
                    write!(f, " + ")?;
                    write_expr(f, b, names, PRODUCT)?;
                }
            }
        }
        Op::Mul(a, b) | Op::Div(a, b) => {
            write_expr(f, a, names, PRODUCT)?;
            write!(f, "{}", if matches!(e.op(), Op::Mul(..)) { " * " } else { " / " })?;
            write_expr(f, b, names, UNARY)?;
        }
        Op::Powi(a, n) => {
            write_expr(f, a, names, ATOM)?;
            write!(f, "^{n}")?;
        }
        Op::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, names, 0)?;
            write!(f, ")")?;
        }
        Op::Table(t, i) => {
            let var = names.get(t.variable()).cloned().unwrap_or_else(|| format!("x{}", t.variable()));
            write!(f, "@{}({var})", t.functions()[*i].name)?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}
