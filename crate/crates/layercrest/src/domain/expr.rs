//! Tiny arithmetic expression language for custom weights.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, `exp`, `ln`, `sin`,
//! `cos`, numeric literals, and the variables `x1`, `x2`. Expressions are
//! parsed once into an AST that supports evaluation and exact symbolic
//! differentiation (used for the weight gradient and γ = ∇a/a).

use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Variable index: 0 = x1, 1 = x2.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::config(format!(
                "unexpected trailing input in expression `{src}` at token {}",
                p.pos
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(0) => x1,
            Expr::Var(_) => x2,
            Expr::Add(a, b) => a.eval(x1, x2) + b.eval(x1, x2),
            Expr::Sub(a, b) => a.eval(x1, x2) - b.eval(x1, x2),
            Expr::Mul(a, b) => a.eval(x1, x2) * b.eval(x1, x2),
            Expr::Div(a, b) => a.eval(x1, x2) / b.eval(x1, x2),
            Expr::Pow(a, b) => a.eval(x1, x2).powf(b.eval(x1, x2)),
            Expr::Neg(a) => -a.eval(x1, x2),
            Expr::Exp(a) => a.eval(x1, x2).exp(),
            Expr::Ln(a) => a.eval(x1, x2).ln(),
            Expr::Sin(a) => a.eval(x1, x2).sin(),
            Expr::Cos(a) => a.eval(x1, x2).cos(),
        }
    }

    /// Exact derivative with respect to variable `var` (0 = x1, 1 = x2).
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        let d = |e: &Expr| e.derivative(var);
        match self {
            Num(_) => Num(0.0),
            Var(v) => Num(if *v == var { 1.0 } else { 0.0 }),
            Add(a, b) => simplify(Add(Box::new(d(a)), Box::new(d(b)))),
            Sub(a, b) => simplify(Sub(Box::new(d(a)), Box::new(d(b)))),
            Mul(a, b) => simplify(Add(
                Box::new(simplify(Mul(Box::new(d(a)), b.clone()))),
                Box::new(simplify(Mul(a.clone(), Box::new(d(b))))),
            )),
            Div(a, b) => simplify(Div(
                Box::new(simplify(Sub(
                    Box::new(simplify(Mul(Box::new(d(a)), b.clone()))),
                    Box::new(simplify(Mul(a.clone(), Box::new(d(b))))),
                ))),
                Box::new(simplify(Mul(b.clone(), b.clone()))),
            )),
            // d(f^g) = f^g (g' ln f + g f'/f); the common constant-exponent
            // case collapses to g f^{g-1} f' below.
            Pow(f, g) => match g.as_ref() {
                Num(c) => simplify(Mul(
                    Box::new(simplify(Mul(
                        Box::new(Num(*c)),
                        Box::new(simplify(Pow(f.clone(), Box::new(Num(c - 1.0))))),
                    ))),
                    Box::new(d(f)),
                )),
                _ => simplify(Mul(
                    Box::new(self.clone()),
                    Box::new(simplify(Add(
                        Box::new(simplify(Mul(Box::new(d(g)), Box::new(Ln(f.clone()))))),
                        Box::new(simplify(Div(
                            Box::new(simplify(Mul(g.clone(), Box::new(d(f))))),
                            f.clone(),
                        ))),
                    ))),
                )),
            },
            Neg(a) => simplify(Neg(Box::new(d(a)))),
            Exp(a) => simplify(Mul(Box::new(self.clone()), Box::new(d(a)))),
            Ln(a) => simplify(Div(Box::new(d(a)), a.clone())),
            Sin(a) => simplify(Mul(Box::new(Cos(a.clone())), Box::new(d(a)))),
            Cos(a) => simplify(Neg(Box::new(simplify(Mul(
                Box::new(Sin(a.clone())),
                Box::new(d(a)),
            ))))),
        }
    }
}

/// Constant folding and unit/zero elimination; keeps derivative ASTs small.
// explicit `== 0.0` guards over float-literal patterns: ±0.0 equality is
// the intended semantics
#[allow(clippy::redundant_guards)]
fn simplify(e: Expr) -> Expr {
    use Expr::*;
    match e {
        Add(a, b) => match (*a, *b) {
            (Num(x), Num(y)) => Num(x + y),
            (Num(z), rhs) if z == 0.0 => rhs,
            (lhs, Num(z)) if z == 0.0 => lhs,
            (lhs, rhs) => Add(Box::new(lhs), Box::new(rhs)),
        },
        Sub(a, b) => match (*a, *b) {
            (Num(x), Num(y)) => Num(x - y),
            (lhs, Num(z)) if z == 0.0 => lhs,
            (lhs, rhs) => Sub(Box::new(lhs), Box::new(rhs)),
        },
        Mul(a, b) => match (*a, *b) {
            (Num(x), Num(y)) => Num(x * y),
            (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
            (Num(o), rhs) if o == 1.0 => rhs,
            (lhs, Num(o)) if o == 1.0 => lhs,
            (lhs, rhs) => Mul(Box::new(lhs), Box::new(rhs)),
        },
        Div(a, b) => match (*a, *b) {
            (Num(z), rhs) if z == 0.0 => {
                // keep 0/f as 0 (f is a weight subexpression, nonzero on the domain)
                let _ = rhs;
                Num(0.0)
            }
            (lhs, Num(o)) if o == 1.0 => lhs,
            (Num(x), Num(y)) => Num(x / y),
            (lhs, rhs) => Div(Box::new(lhs), Box::new(rhs)),
        },
        Pow(a, b) => match (*a, *b) {
            (lhs, Num(o)) if o == 1.0 => lhs,
            (_, Num(z)) if z == 0.0 => Num(1.0),
            (Num(x), Num(y)) => Num(x.powf(y)),
            (lhs, rhs) => Pow(Box::new(lhs), Box::new(rhs)),
        },
        Neg(a) => match *a {
            Num(x) => Num(-x),
            inner => Neg(Box::new(inner)),
        },
        other => other,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(0) => write!(f, "x1"),
            Expr::Var(_) => write!(f, "x2"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
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

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| {
                    Error::config(format!("bad numeric literal `{text}` in expression `{src}`"))
                })?;
                out.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(Error::config(format!(
                    "unexpected character `{other}` in expression `{src}`"
                )));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::config(format!(
                "expected {t:?}, found {got:?} in expression `{}`",
                self.src
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if let Some(Token::Caret) = self.peek() {
            self.bump();
            // right-associative exponent
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Minus) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::Ident(name)) => match name.as_str() {
                "x1" => Ok(Expr::Var(0)),
                "x2" => Ok(Expr::Var(1)),
                "exp" | "ln" | "sin" | "cos" => {
                    self.expect(Token::LParen)?;
                    let inner = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(Box::new(inner)),
                        "ln" => Expr::Ln(Box::new(inner)),
                        "sin" => Expr::Sin(Box::new(inner)),
                        _ => Expr::Cos(Box::new(inner)),
                    })
                }
                other => Err(Error::config(format!(
                    "unknown identifier `{other}` in expression `{}` (allowed: x1, x2, exp, ln, sin, cos)",
                    self.src
                ))),
            },
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            got => Err(Error::config(format!(
                "unexpected token {got:?} in expression `{}`",
                self.src
            ))),
        }
    }
}
