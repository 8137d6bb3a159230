//! Scalar fields over `(t, x1..xn)` defined by a small expression language.
//!
//! Grammar (whitespace insignificant, numbers are decimal literals):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' number)?
//! atom   := number | 't' | 'x'digit+ | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | sqrt | abs
//! ```
//!
//! Evaluation is deterministic. Domain violations (division by zero, square
//! roots of negatives, fractional powers of negatives) surface as
//! [`EvalFault`]s instead of silent NaNs so that optimization loops fail
//! loudly. First derivatives come from forward-mode dual numbers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Syntax error with the byte offset into the source at which it occurred.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("parse error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

/// Runtime evaluation failure of a field expression.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalFault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative value ({0})")]
    SqrtDomain(f64),
    #[error("power {exponent} undefined at base {base}")]
    PowDomain { base: f64, exponent: f64 },
    #[error("non-finite intermediate value in {op}")]
    NonFinite { op: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    Time,
    /// Zero-based spatial variable index (`x1` is `Var(0)`).
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// A scalar function of time and space with forward-mode derivatives.
///
/// The field remembers its source text, so serialization round-trips and two
/// fields compare equal exactly when they were parsed from the same source
/// at the same arity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FieldSource", into = "FieldSource")]
pub struct ScalarField {
    arity: usize,
    source: String,
    #[serde(skip)]
    ast: Expr,
}

#[derive(Serialize, Deserialize, Clone)]
struct FieldSource {
    arity: usize,
    source: String,
}

impl TryFrom<FieldSource> for ScalarField {
    type Error = ParseError;
    fn try_from(s: FieldSource) -> Result<Self, ParseError> {
        ScalarField::parse(&s.source, s.arity)
    }
}

impl From<ScalarField> for FieldSource {
    fn from(f: ScalarField) -> FieldSource {
        FieldSource {
            arity: f.arity,
            source: f.source,
        }
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.source == other.source
    }
}

impl ScalarField {
    /// Parses `source` as a field over `t, x1..xn`. Unknown identifiers and
    /// out-of-range variables (`xk` with `k > n`) are rejected here, not at
    /// evaluation time.
    pub fn parse(source: &str, n: usize) -> Result<ScalarField, ParseError> {
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            arity: n,
            src_len: source.len(),
        };
        let ast = parser.expr()?;
        parser.expect_end()?;
        Ok(ScalarField {
            arity: n,
            source: source.to_string(),
            ast,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when the expression never reads `t`.
    pub fn is_autonomous(&self) -> bool {
        fn uses_time(e: &Expr) -> bool {
            match e {
                Expr::Time => true,
                Expr::Num(_) | Expr::Var(_) => false,
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    uses_time(a) || uses_time(b)
                }
                Expr::Pow(a, _) => uses_time(a),
                Expr::Call(_, a) => uses_time(a),
            }
        }
        !uses_time(&self.ast)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, EvalFault> {
        debug_assert!(x.len() >= self.arity);
        let v = eval_value(&self.ast, t, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalFault::NonFinite { op: "expression" })
        }
    }

    /// Value and directional derivative along `dir` (a tangent in `x`-space).
    pub fn eval_dir(&self, t: f64, x: &[f64], dir: &[f64]) -> Result<(f64, f64), EvalFault> {
        debug_assert!(x.len() >= self.arity && dir.len() >= self.arity);
        let (v, d) = eval_dual(&self.ast, t, x, dir)?;
        if v.is_finite() && d.is_finite() {
            Ok((v, d))
        } else {
            Err(EvalFault::NonFinite { op: "derivative" })
        }
    }

    /// Spatial gradient by one forward pass per coordinate.
    pub fn grad(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, EvalFault> {
        let mut out = vec![0.0; self.arity];
        self.grad_into(t, x, &mut out)?;
        Ok(out)
    }

    pub fn grad_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), EvalFault> {
        let mut dir = vec![0.0; self.arity];
        for k in 0..self.arity {
            dir[k] = 1.0;
            let (_, d) = self.eval_dir(t, x, &dir)?;
            out[k] = d;
            dir[k] = 0.0;
        }
        Ok(())
    }
}

fn eval_value(e: &Expr, t: f64, x: &[f64]) -> Result<f64, EvalFault> {
    Ok(match e {
        Expr::Num(c) => *c,
        Expr::Time => t,
        Expr::Var(k) => x[*k],
        Expr::Add(a, b) => eval_value(a, t, x)? + eval_value(b, t, x)?,
        Expr::Sub(a, b) => eval_value(a, t, x)? - eval_value(b, t, x)?,
        Expr::Mul(a, b) => eval_value(a, t, x)? * eval_value(b, t, x)?,
        Expr::Div(a, b) => {
            let den = eval_value(b, t, x)?;
            if den == 0.0 {
                return Err(EvalFault::DivisionByZero);
            }
            eval_value(a, t, x)? / den
        }
        Expr::Pow(a, p) => pow_value(eval_value(a, t, x)?, *p)?,
        Expr::Call(f, a) => {
            let v = eval_value(a, t, x)?;
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Abs => v.abs(),
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(EvalFault::SqrtDomain(v));
                    }
                    v.sqrt()
                }
            }
        }
    })
}

fn eval_dual(e: &Expr, t: f64, x: &[f64], dir: &[f64]) -> Result<(f64, f64), EvalFault> {
    Ok(match e {
        Expr::Num(c) => (*c, 0.0),
        Expr::Time => (t, 0.0),
        Expr::Var(k) => (x[*k], dir[*k]),
        Expr::Add(a, b) => {
            let (va, da) = eval_dual(a, t, x, dir)?;
            let (vb, db) = eval_dual(b, t, x, dir)?;
            (va + vb, da + db)
        }
        Expr::Sub(a, b) => {
            let (va, da) = eval_dual(a, t, x, dir)?;
            let (vb, db) = eval_dual(b, t, x, dir)?;
            (va - vb, da - db)
        }
        Expr::Mul(a, b) => {
            let (va, da) = eval_dual(a, t, x, dir)?;
            let (vb, db) = eval_dual(b, t, x, dir)?;
            (va * vb, da * vb + va * db)
        }
        Expr::Div(a, b) => {
            let (vb, db) = eval_dual(b, t, x, dir)?;
            if vb == 0.0 {
                return Err(EvalFault::DivisionByZero);
            }
            let (va, da) = eval_dual(a, t, x, dir)?;
            (va / vb, (da * vb - va * db) / (vb * vb))
        }
        Expr::Pow(a, p) => {
            let (va, da) = eval_dual(a, t, x, dir)?;
            let v = pow_value(va, *p)?;
            let d = if *p == 0.0 {
                0.0
            } else if da == 0.0 {
                0.0
            } else {
                pow_value(va, *p - 1.0)? * *p * da
            };
            (v, d)
        }
        Expr::Call(f, a) => {
            let (va, da) = eval_dual(a, t, x, dir)?;
            match f {
                Func::Sin => (va.sin(), va.cos() * da),
                Func::Cos => (va.cos(), -va.sin() * da),
                Func::Exp => {
                    let e = va.exp();
                    (e, e * da)
                }
                Func::Abs => (va.abs(), va.signum() * da * if va == 0.0 { 0.0 } else { 1.0 }),
                Func::Sqrt => {
                    if va < 0.0 {
                        return Err(EvalFault::SqrtDomain(va));
                    }
                    if va == 0.0 {
                        if da == 0.0 {
                            (0.0, 0.0)
                        } else {
                            return Err(EvalFault::SqrtDomain(va));
                        }
                    } else {
                        let s = va.sqrt();
                        (s, da / (2.0 * s))
                    }
                }
            }
        }
    })
}

fn pow_value(base: f64, p: f64) -> Result<f64, EvalFault> {
    if p == 0.0 {
        return Ok(1.0);
    }
    let integral = p.fract() == 0.0;
    if base == 0.0 && p < 0.0 {
        return Err(EvalFault::DivisionByZero);
    }
    if base < 0.0 && !integral {
        return Err(EvalFault::PowDomain { base, exponent: p });
    }
    let v = base.powf(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalFault::NonFinite { op: "pow" })
    }
}

// ---------------------------------------------------------------------------
// Lexing and parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Time,
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent suffix, e.g. 1e-3
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    pos: start,
                    message: format!("invalid number literal `{text}`"),
                })?;
                out.push((start, Tok::Num(value)));
            }
            'a'..='z' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_lowercase() {
                    i += 1;
                }
                let word = &src[start..i];
                match word {
                    "t" => out.push((start, Tok::Time)),
                    "sin" => out.push((start, Tok::Func(Func::Sin))),
                    "cos" => out.push((start, Tok::Func(Func::Cos))),
                    "exp" => out.push((start, Tok::Func(Func::Exp))),
                    "sqrt" => out.push((start, Tok::Func(Func::Sqrt))),
                    "abs" => out.push((start, Tok::Func(Func::Abs))),
                    "x" => {
                        let digits_start = i;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                        if i == digits_start {
                            return Err(ParseError {
                                pos: start,
                                message: "variable needs an index, e.g. `x1`".into(),
                            });
                        }
                        let k: usize = src[digits_start..i].parse().map_err(|_| ParseError {
                            pos: start,
                            message: "variable index out of range".into(),
                        })?;
                        if k == 0 {
                            return Err(ParseError {
                                pos: start,
                                message: "variable indices start at x1".into(),
                            });
                        }
                        out.push((start, Tok::Var(k - 1)));
                    }
                    _ => {
                        return Err(ParseError {
                            pos: start,
                            message: format!("unknown identifier `{word}`"),
                        })
                    }
                }
            }
            _ => {
                return Err(ParseError {
                    pos: i,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(usize, Tok)],
    pos: usize,
    arity: usize,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.src_len)
    }

    fn advance(&mut self) -> Option<&'a (usize, Tok)> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.advance();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.advance();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.advance();
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.advance();
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.advance();
            let pos = self.here();
            match self.advance() {
                Some((_, Tok::Num(p))) => Ok(Expr::Pow(Box::new(base), *p)),
                _ => Err(ParseError {
                    pos,
                    message: "exponent must be a number literal".into(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.advance() {
            Some((_, Tok::Num(v))) => Ok(Expr::Num(*v)),
            Some((_, Tok::Time)) => Ok(Expr::Time),
            Some((p, Tok::Var(k))) => {
                if *k >= self.arity {
                    Err(ParseError {
                        pos: *p,
                        message: format!(
                            "variable x{} exceeds dimension {}",
                            k + 1,
                            self.arity
                        ),
                    })
                } else {
                    Ok(Expr::Var(*k))
                }
            }
            Some((_, Tok::Func(f))) => {
                let f = *f;
                match self.advance() {
                    Some((_, Tok::LParen)) => {}
                    _ => {
                        return Err(ParseError {
                            pos: self.here(),
                            message: format!("expected `(` after {}", f.name()),
                        })
                    }
                }
                let inner = self.expr()?;
                match self.advance() {
                    Some((_, Tok::RParen)) => Ok(Expr::Call(f, Box::new(inner))),
                    _ => Err(ParseError {
                        pos: self.here(),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some((_, Tok::LParen)) => {
                let inner = self.expr()?;
                match self.advance() {
                    Some((_, Tok::RParen)) => Ok(inner),
                    _ => Err(ParseError {
                        pos: self.here(),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some((p, tok)) => Err(ParseError {
                pos: *p,
                message: format!("unexpected token {tok:?}"),
            }),
            None => Err(ParseError {
                pos,
                message: "unexpected end of expression".into(),
            }),
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(ParseError {
                pos: self.here(),
                message: "trailing input after expression".into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fd_grad(f: &ScalarField, t: f64, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (f.eval(t, &xp).unwrap() - f.eval(t, &xm).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn polynomial_value_and_derivative() {
        let f = ScalarField::parse("x1^2", 1).unwrap();
        assert_eq!(f.eval(0.0, &[3.0]).unwrap(), 9.0);
        assert_eq!(f.grad(0.0, &[3.0]).unwrap()[0], 6.0);
    }

    #[test]
    fn cosine_at_zero() {
        let f = ScalarField::parse("cos(x1)", 1).unwrap();
        assert_eq!(f.eval(0.0, &[0.0]).unwrap(), 1.0);
        assert_eq!(f.grad(0.0, &[0.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn mixed_time_space() {
        let f = ScalarField::parse("sin(t)*x1 + x2^2", 2).unwrap();
        let v = f.eval(PI / 2.0, &[2.0, 3.0]).unwrap();
        assert!((v - 11.0).abs() < 1e-12);
        let g = f.grad(PI / 2.0, &[2.0, 3.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[1] - 6.0).abs() < 1e-12);
        let fd = fd_grad(&f, PI / 2.0, &[2.0, 3.0]);
        assert!((g[0] - fd[0]).abs() < 1e-6);
        assert!((g[1] - fd[1]).abs() < 1e-6);
    }

    #[test]
    fn rejects_trailing_operator() {
        let err = ScalarField::parse("x1 +", 1).unwrap_err();
        assert_eq!(err.pos, 4);
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = ScalarField::parse("y + 1", 1).unwrap_err();
        assert_eq!(err.pos, 0);
        assert!(err.message.contains("unknown identifier"));
    }

    #[test]
    fn rejects_arity_overflow() {
        let err = ScalarField::parse("x3", 2).unwrap_err();
        assert!(err.message.contains("exceeds dimension"));
    }

    #[test]
    fn division_by_zero_faults() {
        let f = ScalarField::parse("1/(x1-x1)", 1).unwrap();
        assert_eq!(f.eval(0.0, &[2.0]).unwrap_err(), EvalFault::DivisionByZero);
    }

    #[test]
    fn sqrt_of_negative_faults() {
        let f = ScalarField::parse("sqrt(x1)", 1).unwrap();
        assert!(matches!(
            f.eval(0.0, &[-1.0]).unwrap_err(),
            EvalFault::SqrtDomain(_)
        ));
        assert!(f.eval(0.0, &[4.0]).unwrap() == 2.0);
    }

    #[test]
    fn fractional_power_of_negative_faults() {
        let f = ScalarField::parse("x1^1.5", 1).unwrap();
        assert!(matches!(
            f.eval(0.0, &[-2.0]).unwrap_err(),
            EvalFault::PowDomain { .. }
        ));
        // integer exponents of negatives are fine
        let g = ScalarField::parse("x1^3", 1).unwrap();
        assert_eq!(g.eval(0.0, &[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn autonomy_detection() {
        assert!(ScalarField::parse("x1^2", 1).unwrap().is_autonomous());
        assert!(!ScalarField::parse("t*x1", 1).unwrap().is_autonomous());
    }

    #[test]
    fn exponent_must_be_literal() {
        assert!(ScalarField::parse("x1^(2)", 1).is_err());
        assert!(ScalarField::parse("2^3^2", 1).is_err());
    }

    #[test]
    fn dual_matches_finite_differences_on_random_points() {
        use rand::{Rng, SeedableRng};
        let fields = [
            ScalarField::parse("x1^4 + cos(x1)*x2 - exp(x2/4)", 2).unwrap(),
            ScalarField::parse("sin(t)*x1 + sqrt(x2^2 + 1)", 2).unwrap(),
            ScalarField::parse("(x1^2-1)^2 + x2^6/3", 2).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for f in &fields {
            for _ in 0..100 {
                let t: f64 = rng.random_range(0.0..1.0);
                let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let g = f.grad(t, &x).unwrap();
                let fd = fd_grad(f, t, &x);
                for k in 0..2 {
                    let scale = 1.0_f64.max(fd[k].abs());
                    assert!(
                        (g[k] - fd[k]).abs() / scale <= 1e-5,
                        "field {} coord {k}: dual {} vs fd {}",
                        f.source(),
                        g[k],
                        fd[k]
                    );
                }
            }
        }
    }
}
