//! A small arithmetic expression language over chart variables `x1..xd`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' int)?          int := '-'? digits | '(' '-'? digits ')'
//! atom  := number | xN | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 1-based chart variable `xN`.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

use Expr::*;

fn num(x: f64) -> Expr {
    Num(x)
}

fn is_num(e: &Expr, x: f64) -> bool {
    matches!(e, Num(v) if *v == x)
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(0.0) => num(0.0),
        Neg(inner) => *inner,
        a => Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => num(x + y),
        (a, b) if is_num(&a, 0.0) => b,
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => num(x - y),
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) if is_num(&a, 0.0) => neg(b),
        (a, b) => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => num(x * y),
        (a, b) if is_num(&a, 0.0) || is_num(&b, 0.0) => num(0.0),
        (a, b) if is_num(&a, 1.0) => b,
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        Div(Box::new(a), Box::new(b))
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    match n {
        0 => num(1.0),
        1 => a,
        n => Pow(Box::new(a), n),
    }
}

impl Expr {
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Num(v) => *v,
            Var(k) => vars.get(k - 1).copied().unwrap_or(f64::NAN),
            Neg(a) => -a.eval(vars),
            Add(a, b) => a.eval(vars) + b.eval(vars),
            Sub(a, b) => a.eval(vars) - b.eval(vars),
            Mul(a, b) => a.eval(vars) * b.eval(vars),
            Div(a, b) => a.eval(vars) / b.eval(vars),
            Pow(a, n) => a.eval(vars).powi(*n),
            Call(f, a) => f.apply(a.eval(vars)),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match self {
            Num(_) => None,
            Var(k) => Some(*k),
            Neg(a) | Pow(a, _) | Call(_, a) => a.max_variable(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                match (a.max_variable(), b.max_variable()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.max_variable().is_none()
    }

    /// Symbolic `∂/∂x_var` (1-based), with light algebraic simplification.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Num(_) => num(0.0),
            Var(k) => num(if *k == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) if b.is_constant() => div(a.derivative(var), (**b).clone()),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                pow((**b).clone(), 2),
            ),
            Pow(a, n) => mul(
                mul(num(*n as f64), pow((**a).clone(), n - 1)),
                a.derivative(var),
            ),
            Call(Func::Sin, a) => mul(Call(Func::Cos, a.clone()), a.derivative(var)),
            Call(Func::Cos, a) => neg(mul(Call(Func::Sin, a.clone()), a.derivative(var))),
            Call(Func::Exp, a) => mul(Call(Func::Exp, a.clone()), a.derivative(var)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            Pow(..) => 4,
            Num(_) | Var(_) | Call(..) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Num(v) => write!(f, "{v}"),
            Var(k) => write!(f, "x{k}"),
            Neg(a) => {
                write!(f, "-")?;
                a.fmt_at(f, 3)
            }
            Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)
            }
            Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "*")?;
                b.fmt_at(f, 3)
            }
            Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "/")?;
                b.fmt_at(f, 3)
            }
            Pow(a, n) => {
                a.fmt_at(f, 5)?;
                write!(f, "^{n}")
            }
            Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v = lit.parse::<f64>().map_err(|_| Error::Syntax {
                position: start,
                message: format!("malformed number `{lit}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Syntax {
                position: i,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.position(),
            message: message.into(),
        })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            self.error(format!("expected `{op}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let n = self.exponent()?;
        if self.peek() == Some(&Tok::Op('^')) {
            return self.error("chained powers need parentheses");
        }
        Ok(Pow(Box::new(base), n))
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = self.eat('(');
        let negative = self.eat('-');
        let n = match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v <= i32::MAX as f64 => *v as i32,
            _ => return self.error("exponent must be an integer literal"),
        };
        self.pos += 1;
        if paren {
            self.expect(')')?;
        }
        Ok(if negative { -n } else { n })
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.position();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(func) = func {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Call(func, Box::new(arg)));
                }
                match name.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
                    Some(k) if k >= 1 && !name[1..].starts_with('0') => Ok(Var(k)),
                    _ => Err(Error::UnknownIdentifier(name)),
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Op(c)) => Err(Error::Syntax {
                position: start,
                message: format!("unexpected `{c}`"),
            }),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parses an expression over `x1, x2, ...`.
pub fn parse_expression(text: &str) -> Result<Expr> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(Error::Syntax {
            position: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

/// Symbolic derivative with respect to the 1-based variable `var`.
pub fn diff_expression(e: &Expr, var: usize) -> Expr {
    e.derivative(var)
}
