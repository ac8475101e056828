//! Infix expressions over meadow rationals with free variables.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := INT | IDENT | 'inv' '(' expr ')' | '(' expr ')'
//! INT     := [0-9]+
//! IDENT   := [A-Za-z_][A-Za-z0-9_]*      (except the keyword `inv`)
//! ```
//!
//! `/` binds like `*` and both are left-associative, so `1/0` is
//! `Div(1, 0)` and a rational literal `a/b` is the quotient of two
//! integer constants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use super::{NumericsError, Quantity, Rat};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Rat),
    Var(String),
    Neg(Box<Expr>),
    Inv(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

pub type Env = BTreeMap<String, Quantity>;

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(Rat::from(n))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn inv(a: Expr) -> Expr {
        Expr::Inv(Box::new(a))
    }

    /// True when every constant is a non-negative integer, i.e. the tree is
    /// exactly what the parser produces for its printed form.
    pub fn is_canonical(&self) -> bool {
        match self {
            Expr::Const(r) => r.is_integer() && !r.is_negative(),
            Expr::Var(_) => true,
            Expr::Neg(a) | Expr::Inv(a) => a.is_canonical(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_canonical() && b.is_canonical()
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Inv(a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(r) if r.is_negative() => 3,
            _ => 4,
        }
    }

    pub fn eval(&self, env: &Env) -> Result<Quantity, NumericsError> {
        eval_expr(self, env)
    }
}

pub fn eval_expr(e: &Expr, env: &Env) -> Result<Quantity, NumericsError> {
    Ok(match e {
        Expr::Const(r) => Quantity::dimensionless(r.clone()),
        Expr::Var(v) => env.get(v).cloned().ok_or_else(|| NumericsError::UnboundVariable(v.clone()))?,
        Expr::Neg(a) => eval_expr(a, env)?.neg(),
        Expr::Inv(a) => eval_expr(a, env)?.inverse(),
        Expr::Add(a, b) => eval_expr(a, env)?.checked_add(&eval_expr(b, env)?)?,
        Expr::Sub(a, b) => eval_expr(a, env)?.checked_sub(&eval_expr(b, env)?)?,
        Expr::Mul(a, b) => eval_expr(a, env)?.mul(&eval_expr(b, env)?),
        Expr::Div(a, b) => eval_expr(a, env)?.div(&eval_expr(b, env)?),
    })
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binary = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, level: u8| {
            write_child(f, a, a.precedence() < level)?;
            write!(f, " {op} ")?;
            write_child(f, b, b.precedence() <= level)
        };
        match self {
            Expr::Const(r) if r.is_integer() => write!(f, "{r}"),
            // Non-canonical constants print as an equal-valued expression.
            Expr::Const(r) if r.is_negative() => write!(f, "-{}", Expr::Const(-r)),
            Expr::Const(r) => write!(f, "({r})"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, a.precedence() < 3)
            }
            Expr::Inv(a) => write!(f, "inv({a})"),
            Expr::Add(a, b) => binary(f, a, "+", b, 1),
            Expr::Sub(a, b) => binary(f, a, "-", b, 1),
            Expr::Mul(a, b) => binary(f, a, "*", b, 2),
            Expr::Div(a, b) => binary(f, a, "/", b, 2),
        }
    }
}

impl FromStr for Expr {
    type Err = NumericsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Inv,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, NumericsError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((Tok::Int(text[start..i].parse().expect("digits")), start));
                continue;
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                out.push((if word == "inv" { Tok::Inv } else { Tok::Ident(word.to_string()) }, start));
                continue;
            }
            _ => {
                return Err(NumericsError::Syntax {
                    offset: start,
                    expected: expected_operand(),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

fn expected_operand() -> Vec<String> {
    ["integer", "identifier", "'-'", "'('", "'inv'"].iter().map(|s| s.to_string()).collect()
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, NumericsError> {
        Err(NumericsError::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expr(&mut self) -> Result<Expr, NumericsError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, NumericsError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, NumericsError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, NumericsError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Const(Rat::from_integer(n)))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr::Var(name))
            }
            Tok::Inv => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return self.fail(&["'('"]);
                }
                self.bump();
                let inner = self.expr()?;
                self.close()?;
                Ok(Expr::inv(inner))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.close()?;
                Ok(inner)
            }
            _ => self.fail(&["integer", "identifier", "'-'", "'('", "'inv'"]),
        }
    }

    fn close(&mut self) -> Result<(), NumericsError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.fail(&["')'", "'+'", "'-'", "'*'", "'/'"])
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, NumericsError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&["end of input", "'+'", "'-'", "'*'", "'/'"]);
    }
    Ok(e)
}
