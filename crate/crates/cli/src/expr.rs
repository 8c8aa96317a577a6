//! Tiny arithmetic expression evaluator for custom level-set initial data.
//!
//! Grammar (precedence climbing):
//!
//! ```text
//!   expr   := term (('+' | '-') term)*
//!   term   := factor (('*' | '/') factor)*
//!   factor := unary ('^' factor)?
//!   unary  := '-' unary | atom
//!   atom   := number | 'x' | 'y' | 'pi' | func '(' expr (',' expr)* ')'
//!           | '(' expr ')'
//! ```
//!
//! Functions: sqrt, abs, sin, cos, tan, exp, ln, min, max, hypot.

use anyhow::{anyhow, bail, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
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
                let s: String = bytes[start..i].iter().collect();
                out.push(Tok::Num(s.parse().map_err(|_| anyhow!("bad number '{s}'"))?));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            _ => bail!("unexpected character '{c}' in expression"),
        }
    }
    Ok(out)
}

/// Compiled expression tree.
#[derive(Debug, Clone)]
pub enum Expr {
    Const(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Fn1(fn(f64) -> f64, Box<Expr>),
    Fn2(fn(f64, f64) -> f64, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            bail!("trailing input in expression");
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Fn1(f, a) => f(a.eval(x, y)),
            Expr::Fn2(f, a, b) => f(a.eval(x, y), b.eval(x, y)),
        }
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> Result<()> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            bail!("expected {t:?}, found {:?}", self.peek())
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let exp = self.factor()?; // right associative
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(&Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "y" => Ok(Expr::Y),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    _ => {
                        self.eat(&Tok::LParen)?;
                        let a = self.expr()?;
                        let one = |f: fn(f64) -> f64, a: Expr| -> Result<Expr> {
                            Ok(Expr::Fn1(f, Box::new(a)))
                        };
                        let expr = match name.as_str() {
                            "sqrt" => one(f64::sqrt, a)?,
                            "abs" => one(f64::abs, a)?,
                            "sin" => one(f64::sin, a)?,
                            "cos" => one(f64::cos, a)?,
                            "tan" => one(f64::tan, a)?,
                            "exp" => one(f64::exp, a)?,
                            "ln" => one(f64::ln, a)?,
                            "min" | "max" | "hypot" => {
                                self.eat(&Tok::Comma)?;
                                let b = self.expr()?;
                                let f = match name.as_str() {
                                    "min" => f64::min,
                                    "max" => f64::max,
                                    _ => f64::hypot,
                                };
                                Expr::Fn2(f, Box::new(a), Box::new(b))
                            }
                            _ => bail!("unknown function '{name}'"),
                        };
                        self.eat(&Tok::RParen)?;
                        Ok(expr)
                    }
                }
            }
            other => bail!("unexpected token {other:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("0.3 - sqrt((x-0.5)^2 + y^2)").unwrap();
        assert!((e.eval(0.5, 0.0) - 0.3).abs() < 1e-15);
        assert!((e.eval(0.8, 0.0)).abs() < 1e-15);
        let e = Expr::parse("min(x, y) + max(x, 2*y) - pi/pi").unwrap();
        assert!((e.eval(1.0, 3.0) - (1.0 + 6.0 - 1.0)).abs() < 1e-15);
        let e = Expr::parse("-x^2").unwrap();
        assert_eq!(e.eval(2.0, 0.0), -4.0);
        assert!(Expr::parse("bogus(x)").is_err());
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("(x").is_err());
    }
}
