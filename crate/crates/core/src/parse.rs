//! Expression grammar and coefficient extraction.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' exponent)?
//! exponent:= ('-' | '+')? power
//! primary := number | name | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `x`, `y` and `p` (for `y'`) are variables; any other single letter is a
//! parameter. Exponents must be integer constants unless rational exponents
//! are enabled.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{Expr, ExprError, Func, RatFn, Symbol};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
    #[error("exponent at byte {offset} is not an integer constant")]
    NonIntegerExponent { offset: usize },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept constant rational exponents such as `x^(1/3)`.
    pub rational_exponents: bool,
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, ParseOptions::default())
}

/// Parses expressions as printed by the library, roots included.
pub fn parse_printed(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, ParseOptions { rational_exponents: true })
}

pub fn parse_with(text: &str, opts: ParseOptions) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, opts };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    opts: ParseOptions,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::add(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                factors.push(self.unary()?.recip());
            } else {
                return Ok(Expr::mul(factors));
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let exponent = if self.eat(b'-') {
            -self.power()?
        } else {
            self.eat(b'+');
            self.power()?
        };
        let q = exponent
            .to_ratfn()
            .ok()
            .and_then(|r| r.as_rational())
            .ok_or(ParseError::NonIntegerExponent { offset: at })?;
        if q.is_integer() {
            let k = i64::try_from(q.to_integer()).map_err(|_| ParseError::NonIntegerExponent { offset: at })?;
            return Ok(Expr::pow(base, k));
        }
        if self.opts.rational_exponents {
            return Ok(Expr::rat_pow(base, q));
        }
        Err(ParseError::NonIntegerExponent { offset: at })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(_) => Err(self.error("expected a number, name or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut int = BigInt::zero();
        let mut scale = BigInt::one();
        let mut seen_digit = false;
        let mut seen_dot = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                int = int * 10u32 + (c - b'0') as u32;
                if seen_dot {
                    scale *= 10u32;
                }
                seen_digit = true;
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if !seen_digit {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        Ok(Expr::num(BigRational::new(int, scale)))
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name)
                .ok_or_else(|| ParseError::UnknownFunction { offset: start, name: name.to_string() })?;
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)` after function argument"));
            }
            return Ok(Expr::func(func, arg));
        }
        match name {
            "x" => Ok(Expr::x()),
            "y" => Ok(Expr::y()),
            "p" => Ok(Expr::p()),
            n if n.len() == 1 => Ok(Expr::param(n)),
            n if Func::from_name(n).is_some() => {
                Err(ParseError::Syntax { offset: self.pos, message: format!("`{n}` needs an argument") })
            }
            _ => Err(ParseError::Syntax {
                offset: start,
                message: format!("unknown name `{name}`; parameters are single letters"),
            }),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("right-hand side is not a polynomial of degree at most 3 in y': {0}")]
    NotCubicInDerivative(String),
    #[error(transparent)]
    Undefined(#[from] ExprError),
}

/// Coefficients of `y'' = P + 3Q y' + 3R y'^2 + S y'^3`, in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdeCubic {
    pub p: RatFn,
    pub q: RatFn,
    pub r: RatFn,
    pub s: RatFn,
}

impl OdeCubic {
    pub fn from_ratfns(p: RatFn, q: RatFn, r: RatFn, s: RatFn) -> Result<OdeCubic, ExtractError> {
        for c in [&p, &q, &r, &s] {
            if mentions_p(c) {
                return Err(ExtractError::NotCubicInDerivative("a coefficient depends on y'".into()));
            }
        }
        Ok(OdeCubic { p, q, r, s })
    }

    /// From `P, Q, R, S` as expressions, already in the one-third convention.
    pub fn new(p: &Expr, q: &Expr, r: &Expr, s: &Expr) -> Result<OdeCubic, ExtractError> {
        Self::from_ratfns(p.to_ratfn()?, q.to_ratfn()?, r.to_ratfn()?, s.to_ratfn()?)
    }

    /// From the raw `y'` and `y'^2` coefficients, which are divided by 3.
    pub fn from_raw(p: &Expr, q3: &Expr, r3: &Expr, s: &Expr) -> Result<OdeCubic, ExtractError> {
        let third = RatFn::ratio(1, 3);
        Self::from_ratfns(p.to_ratfn()?, q3.to_ratfn()?.mul(&third), r3.to_ratfn()?.mul(&third), s.to_ratfn()?)
    }

    pub fn coefficients(&self) -> [&RatFn; 4] {
        [&self.p, &self.q, &self.r, &self.s]
    }

    /// `P + 3Q p + 3R p^2 + S p^3`.
    pub fn rhs(&self) -> Expr {
        let p = Expr::p();
        Expr::add(vec![
            self.p.to_expr(),
            3 * self.q.to_expr() * p.clone(),
            3 * self.r.to_expr() * p.powi(2),
            self.s.to_expr() * p.powi(3),
        ])
        .normalize()
    }
}

fn mentions_p(r: &RatFn) -> bool {
    r.vars().iter().any(|s| match s {
        Symbol::P => true,
        Symbol::Atom(a) => mentions_p(&a.arg),
        _ => false,
    })
}

pub fn extract_cubic_coefficients(rhs: &Expr) -> Result<OdeCubic, ExtractError> {
    OdeCubic::from_rhs(&rhs.to_ratfn()?)
}

impl OdeCubic {
    /// Splits a right-hand side in `x`, `y`, `p` by powers of `p`.
    pub fn from_rhs(r: &RatFn) -> Result<OdeCubic, ExtractError> {
        let in_atom = r.vars().iter().any(|s| matches!(s, Symbol::Atom(a) if mentions_p(&a.arg)));
        if in_atom {
            return Err(ExtractError::NotCubicInDerivative("y' occurs inside a function".into()));
        }
        let coeffs = r
            .coefficients_in(&Symbol::P)
            .ok_or_else(|| ExtractError::NotCubicInDerivative("y' occurs in a denominator".into()))?;
        if coeffs.len() > 4 {
            return Err(ExtractError::NotCubicInDerivative(format!("degree {} in y'", coeffs.len() - 1)));
        }
        let get = |k: usize| coeffs.get(k).cloned().unwrap_or_else(RatFn::zero);
        let third = RatFn::ratio(1, 3);
        OdeCubic::from_ratfns(get(0), get(1).mul(&third), get(2).mul(&third), get(3))
    }
}

/// Parses a right-hand side in `x`, `y`, `p` and extracts its coefficients.
pub fn parse_ode(rhs: &str) -> Result<OdeCubic, ParseOdeError> {
    let e = parse_expression(rhs)?;
    Ok(extract_cubic_coefficients(&e)?)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseOdeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(s: &str) -> Expr {
        parse_expression(s).unwrap().normalize()
    }

    #[test]
    fn grammar_basics() {
        assert_eq!(parse_expression("((x))").unwrap(), Expr::x());
        assert_eq!(norm("6*y^2 + x").to_string(), "x + 6*y^2");
        assert_eq!(norm("2*y^3 + x*y + a").to_string(), "x*y + 2*y^3 + a");
        assert_eq!(norm("-x^2"), (-Expr::x().powi(2)).normalize());
        assert_eq!(norm("2^3^2"), Expr::int(512));
        assert_eq!(norm("x^-2"), Expr::x().powi(-2));
        assert_eq!(norm("0.25*x"), (Expr::rational(1, 4) * Expr::x()).normalize());
        assert_eq!(norm("x*sin(y)/2 - 1/3"), (Expr::x() * Expr::sin(Expr::y()) / 2 - Expr::rational(1, 3)).normalize());
    }

    #[test]
    fn grammar_errors() {
        assert!(matches!(parse_expression("x + * y"), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("tan(x)"), Err(ParseError::UnknownFunction { offset: 0, .. })));
        assert!(matches!(parse_expression("x^(1/2)"), Err(ParseError::NonIntegerExponent { .. })));
        assert!(matches!(parse_expression("x^y"), Err(ParseError::NonIntegerExponent { .. })));
        assert!(parse_printed("x^(1/2)").is_ok());
        assert!(matches!(parse_expression("(x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expression("x y"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn coefficients_of_the_third_equation() {
        let ode = parse_ode("p^2/y - p/x + b/x").unwrap();
        assert_eq!(ode.p, norm("b/x").to_ratfn().unwrap());
        assert_eq!(ode.q, norm("-1/(3*x)").to_ratfn().unwrap());
        assert_eq!(ode.r, norm("1/(3*y)").to_ratfn().unwrap());
        assert!(ode.s.is_zero());
    }

    #[test]
    fn coefficients_of_the_first_equation() {
        let ode = parse_ode("6*y^2 + x").unwrap();
        assert_eq!(ode.p.to_expr().to_string(), "x + 6*y^2");
        assert!(ode.q.is_zero() && ode.r.is_zero() && ode.s.is_zero());
    }

    #[test]
    fn degree_overflow_and_bad_positions() {
        assert!(matches!(parse_ode("p^4"), Err(ParseOdeError::Extract(ExtractError::NotCubicInDerivative(_)))));
        assert!(matches!(parse_ode("1/p"), Err(ParseOdeError::Extract(ExtractError::NotCubicInDerivative(_)))));
        assert!(matches!(parse_ode("sin(p)"), Err(ParseOdeError::Extract(ExtractError::NotCubicInDerivative(_)))));
    }

    #[test]
    fn reassembly() {
        let src = parse_expression("x*p^3 - 2*p^2/y + sin(x)*p + y").unwrap();
        let ode = extract_cubic_coefficients(&src).unwrap();
        assert!((ode.rhs() - src).normalize().is_zero_literal());
    }
}
