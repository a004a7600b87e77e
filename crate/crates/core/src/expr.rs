//! Analytic field expressions over `(x1, x2, x3, t)`.
//!
//! Expressions are parsed from text or built with operator overloads and are
//! evaluated over any [`Real`], so dual numbers give exact derivatives.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::ad::Real;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X1,
    X2,
    X3,
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power.
    PowI(Box<Expr>, i32),
    /// Constant real power.
    PowF(Box<Expr>, f64),
    /// General power `a^b`, evaluated as `exp(b ln a)`.
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(c: f64) -> Expr {
        Expr::Num(c)
    }

    /// Coordinate `x_{i+1}`.
    pub fn x(i: usize) -> Expr {
        Expr::Var([Var::X1, Var::X2, Var::X3][i])
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn sin(self) -> Expr {
        Expr::Call(Func::Sin, Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Call(Func::Cos, Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Call(Func::Exp, Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Call(Func::Sqrt, Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Call(Func::Log, Box::new(self))
    }

    pub fn powi(self, n: i32) -> Expr {
        match self {
            Expr::Num(c) => Expr::Num(c.powi(n)),
            e => Expr::PowI(Box::new(e), n),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Num(c) => Some(*c),
            _ => None,
        }
    }

    /// True when the expression does not involve `t`.
    pub fn is_steady(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(v) => *v != Var::T,
            Expr::Neg(a) | Expr::PowI(a, _) | Expr::PowF(a, _) | Expr::Call(_, a) => a.is_steady(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_steady() && b.is_steady()
            }
        }
    }

    /// Replaces the coordinates and time by other expressions.
    pub fn substitute(&self, x: &[Expr; 3], t: &Expr) -> Expr {
        let b = |e: &Expr| Box::new(e.substitute(x, t));
        match self {
            Expr::Num(c) => Expr::Num(*c),
            Expr::Var(Var::X1) => x[0].clone(),
            Expr::Var(Var::X2) => x[1].clone(),
            Expr::Var(Var::X3) => x[2].clone(),
            Expr::Var(Var::T) => t.clone(),
            Expr::Neg(a) => Expr::Neg(b(a)),
            Expr::Add(a, c) => Expr::Add(b(a), b(c)),
            Expr::Sub(a, c) => Expr::Sub(b(a), b(c)),
            Expr::Mul(a, c) => Expr::Mul(b(a), b(c)),
            Expr::Div(a, c) => Expr::Div(b(a), b(c)),
            Expr::PowI(a, n) => Expr::PowI(b(a), *n),
            Expr::PowF(a, p) => Expr::PowF(b(a), *p),
            Expr::Pow(a, c) => Expr::Pow(b(a), b(c)),
            Expr::Call(f, a) => Expr::Call(*f, b(a)),
        }
    }

    pub fn eval<T: Real>(&self, x: &[T; 3], t: T) -> T {
        match self {
            Expr::Num(c) => T::cst(*c),
            Expr::Var(Var::X1) => x[0],
            Expr::Var(Var::X2) => x[1],
            Expr::Var(Var::X3) => x[2],
            Expr::Var(Var::T) => t,
            Expr::Neg(a) => -a.eval(x, t),
            Expr::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Expr::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Expr::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Expr::Div(a, b) => a.eval(x, t) / b.eval(x, t),
            Expr::PowI(a, n) => a.eval(x, t).powi(*n),
            Expr::PowF(a, p) => a.eval(x, t).powf(*p),
            Expr::Pow(a, b) => (b.eval(x, t) * a.eval(x, t).ln()).exp(),
            Expr::Call(f, a) => {
                let v = a.eval(x, t);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    pub fn eval_f64(&self, x: [f64; 3], t: f64) -> f64 {
        self.eval(&x, t)
    }

    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::PowI(..) | Expr::PowF(..) | Expr::Pow(..) => 4,
            Expr::Num(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Var(v) => f.write_str(match v {
                Var::X1 => "x1",
                Var::X2 => "x2",
                Var::X3 => "x3",
                Var::T => "t",
            }),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, 4)
            }
            Expr::Add(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" + ")?;
                wrap(f, b, 2)
            }
            Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" - ")?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) => {
                wrap(f, a, 2)?;
                f.write_str("*")?;
                wrap(f, b, 3)
            }
            Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                f.write_str("/")?;
                wrap(f, b, 3)
            }
            Expr::PowI(a, n) => {
                wrap(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::PowF(a, p) => {
                wrap(f, a, 5)?;
                write!(f, "^({p:?})")
            }
            Expr::Pow(a, b) => {
                wrap(f, a, 5)?;
                f.write_str("^")?;
                wrap(f, b, 5)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $var:ident, $fold:expr) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
                    return Expr::Num($fold(a, b));
                }
                Expr::$var(Box::new(self), Box::new(o))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $m(self, c: f64) -> Expr {
                self.$m(Expr::Num(c))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $m(self, e: Expr) -> Expr {
                Expr::Num(self).$m(e)
            }
        }
    };
}

binop!(Add, add, Add, |a: f64, b: f64| a + b);
binop!(Sub, sub, Sub, |a: f64, b: f64| a - b);
binop!(Mul, mul, Mul, |a: f64, b: f64| a * b);
binop!(Div, div, Div, |a: f64, b: f64| a / b);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(c) => Expr::Num(-c),
            e => Expr::Neg(Box::new(e)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && (b[j] as char).is_ascii_digit() {
                    i = j;
                    while i < b.len() && (b[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Expr { pos: start, msg: format!("bad number `{text}`") })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            if c == '*' && i + 1 < b.len() && b[i + 1] == b'*' {
                out.push((i, Tok::Op('^')));
                i += 2;
            } else {
                out.push((i, Tok::Op(c)));
                i += 1;
            }
        } else {
            return Err(Error::Expr { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        let at = self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.src.len());
        Error::Expr { pos: at, msg: msg.to_string() }
    }

    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Op(c))) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { lhs + rhs } else { lhs - rhs };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { lhs * rhs } else { lhs / rhs };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let exp = self.unary()?;
        Ok(match exp.as_const() {
            Some(p) if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 => base.powi(p as i32),
            Some(p) => match base.as_const() {
                Some(b) => Expr::Num(b.powf(p)),
                None => Expr::PowF(Box::new(base), p),
            },
            None => Expr::Pow(Box::new(base), Box::new(exp)),
        })
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x1" => Ok(Expr::x(0)),
                "x2" => Ok(Expr::x(1)),
                "x3" => Ok(Expr::x(2)),
                "t" => Ok(Expr::t()),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        self.pos -= 1;
                        return Err(self.error(&format!("unknown identifier `{name}`")));
                    };
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            Tok::Op(c) => {
                self.pos -= 1;
                Err(self.error(&format!("unexpected `{c}`")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::Dual;

    fn ev(s: &str, x: [f64; 3], t: f64) -> f64 {
        Expr::parse(s).unwrap().eval_f64(x, t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2*3", [0.0; 3], 0.0), 7.0);
        assert_eq!(ev("-2^2", [0.0; 3], 0.0), -4.0);
        assert_eq!(ev("2^3^2", [0.0; 3], 0.0), 512.0);
        assert_eq!(ev("8/4/2", [0.0; 3], 0.0), 1.0);
        assert_eq!(ev("x1*x2 - x3/t", [2.0, 3.0, 4.0], 2.0), 4.0);
        assert_eq!(ev("2**-1", [0.0; 3], 0.0), 0.5);
        assert!((ev("sin(pi/2) + exp(0) + 1e-1", [0.0; 3], 0.0) - 2.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x1 +").is_err());
        assert!(Expr::parse("foo(x1)").is_err());
        assert!(Expr::parse("(x1").is_err());
        assert!(Expr::parse("x1 $ 2").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["x1^2*sin(x2 - t) / (1 + x3^2)", "-(x1 + 2)^3", "exp(-x1)*(x2 - x3)", "x1^(0.5) + 2^x2"] {
            let e = Expr::parse(s).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            let p = [0.3, 0.7, -0.2];
            assert!((e.eval_f64(p, 0.4) - again.eval_f64(p, 0.4)).abs() < 1e-14, "{s} -> {e}");
        }
    }

    #[test]
    fn derivative_through_general_power() {
        let e = Expr::parse("x1^x2").unwrap();
        let x = [Dual::<f64, 2>::var(1.3, 0), Dual::var(2.2, 1), Dual::constant(0.0)];
        let v = e.eval(&x, Dual::constant(0.0));
        assert!((v.eps[0] - 2.2 * 1.3f64.powf(1.2)).abs() < 1e-13);
        assert!((v.eps[1] - 1.3f64.powf(2.2) * 1.3f64.ln()).abs() < 1e-13);
    }
}
