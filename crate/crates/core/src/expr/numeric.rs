//! High-precision evaluation at rational points.

use std::collections::BTreeMap;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use super::{Expr, Func, Node, SymbolName, Var};

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("denominator vanishes at the sample point")]
    PoleAtPoint,
    #[error("outside the real domain: {0}")]
    Domain(&'static str),
    #[error("no value assigned to symbol `{0}`")]
    Unbound(String),
}

/// Assignment of exact rationals to variables and parameters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Point(BTreeMap<SymbolName, BigRational>);

impl Point {
    pub fn new() -> Point {
        Point::default()
    }

    pub fn with(mut self, name: &str, value: BigRational) -> Point {
        self.set(SymbolName::parse(name), value);
        self
    }

    pub fn with_int(self, name: &str, value: i64) -> Point {
        self.with(name, BigRational::from_integer(BigInt::from(value)))
    }

    pub fn set(&mut self, name: SymbolName, value: BigRational) {
        self.0.insert(name, value);
    }

    pub fn get(&self, name: &SymbolName) -> Option<&BigRational> {
        self.0.get(name)
    }

    pub fn var(&self, v: Var) -> Option<&BigRational> {
        self.0.get(&SymbolName::Var(v))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SymbolName, &BigRational)> {
        self.0.iter()
    }
}

/// A high-precision real.
#[derive(Debug)]
pub struct HpFloat(pub BigFloat);

impl HpFloat {
    pub fn to_f64(&self) -> f64 {
        to_f64(&self.0)
    }

    pub fn inner(&self) -> &BigFloat {
        &self.0
    }
}

impl Clone for HpFloat {
    fn clone(&self) -> Self {
        HpFloat(self.0.clone())
    }
}

impl fmt::Display for HpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn to_f64(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    v.to_string().parse::<f64>().unwrap_or(f64::NAN)
}

/// Evaluator with a fixed working precision and a constants cache.
pub struct Evaluator {
    bits: usize,
    cc: Consts,
}

impl Evaluator {
    pub fn new(digits: u32) -> Evaluator {
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64;
        Evaluator { bits, cc: Consts::new().expect("constants cache") }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn rational(&mut self, q: &BigRational) -> BigFloat {
        let n = self.integer(q.numer());
        if q.is_integer() {
            return n;
        }
        let d = self.integer(q.denom());
        n.div(&d, self.bits, RM)
    }

    pub fn integer(&mut self, n: &BigInt) -> BigFloat {
        match n.to_i64() {
            Some(v) => BigFloat::from_i64(v, self.bits),
            None => BigFloat::parse(&n.to_string(), Radix::Dec, self.bits, RM, &mut self.cc),
        }
    }

    pub fn from_f64(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.bits)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    /// Evaluates `e`, returning the value and the largest magnitude met
    /// along the way.
    pub fn eval(&mut self, e: &Expr, pt: &Point) -> Result<(BigFloat, BigFloat), EvalError> {
        let (v, mag) = match e.node() {
            Node::Num(q) => {
                let v = self.rational(q);
                let m = v.abs();
                (v, m)
            }
            Node::Var(var) => {
                let q = pt.var(*var).ok_or_else(|| EvalError::Unbound(var.name().to_string()))?;
                let v = self.rational(q);
                let m = v.abs();
                (v, m)
            }
            Node::Param(n) => {
                let q = pt.get(&SymbolName::Param(n.clone())).ok_or_else(|| EvalError::Unbound(n.to_string()))?;
                let v = self.rational(q);
                let m = v.abs();
                (v, m)
            }
            Node::Add(ts) => {
                let mut acc = BigFloat::from_i64(0, self.bits);
                let mut mag = BigFloat::from_i64(0, self.bits);
                for t in ts {
                    let (v, m) = self.eval(t, pt)?;
                    acc = acc.add(&v, self.bits, RM);
                    mag = max_abs(&mag, &m);
                }
                (acc, mag)
            }
            Node::Mul(fs) => {
                let mut acc = BigFloat::from_i64(1, self.bits);
                let mut mag = BigFloat::from_i64(0, self.bits);
                for f in fs {
                    let (v, m) = self.eval(f, pt)?;
                    acc = acc.mul(&v, self.bits, RM);
                    mag = max_abs(&mag, &m);
                }
                let m = max_abs(&mag, &acc);
                (acc, m)
            }
            Node::Pow(b, k) => {
                let (v, m) = self.eval(b, pt)?;
                let r = if *k >= 0 {
                    v.powi(*k as usize, self.bits, RM)
                } else {
                    self.check_pole(&v, &m)?;
                    v.powi(k.unsigned_abs() as usize, self.bits, RM).reciprocal(self.bits, RM)
                };
                let mm = max_abs(&m, &r);
                (r, mm)
            }
            Node::RatPow(b, q) => {
                let (v, m) = self.eval(b, pt)?;
                let num = q.numer().to_i64().expect("small exponent");
                let den = q.denom().to_u64().expect("small root index");
                if v.is_zero() {
                    if num > 0 {
                        return Ok((v, m));
                    }
                    return Err(EvalError::PoleAtPoint);
                }
                if num < 0 {
                    self.check_pole(&v, &m)?;
                }
                let negative = v.is_negative();
                if negative && den % 2 == 0 {
                    return Err(EvalError::Domain("even root of a negative number"));
                }
                let ln = v.abs().ln(self.bits, RM, &mut self.cc);
                let scaled = ln.div(&BigFloat::from_u64(den, self.bits), self.bits, RM);
                let mut root = scaled.exp(self.bits, RM, &mut self.cc);
                if negative {
                    root.inv_sign();
                }
                let mut r = root.powi(num.unsigned_abs() as usize, self.bits, RM);
                if num < 0 {
                    r = r.reciprocal(self.bits, RM);
                }
                let mm = max_abs(&m, &r);
                (r, mm)
            }
            Node::Func(f, u) => {
                let (v, m) = self.eval(u, pt)?;
                let r = match f {
                    Func::Sin => v.sin(self.bits, RM, &mut self.cc),
                    Func::Cos => v.cos(self.bits, RM, &mut self.cc),
                    Func::Exp => v.exp(self.bits, RM, &mut self.cc),
                    Func::Ln => {
                        if v.is_zero() || v.is_negative() {
                            return Err(EvalError::Domain("logarithm of a nonpositive number"));
                        }
                        self.check_pole(&v, &m)?;
                        v.ln(self.bits, RM, &mut self.cc)
                    }
                };
                let mm = max_abs(&m, &r);
                (r, mm)
            }
        };
        if v.is_nan() || v.is_inf() {
            return Err(EvalError::PoleAtPoint);
        }
        Ok((v, mag))
    }

    /// A value that is zero up to the rounding noise of its own computation
    /// is treated as an exact zero.
    fn check_pole(&self, v: &BigFloat, mag: &BigFloat) -> Result<(), EvalError> {
        if v.is_zero() {
            return Err(EvalError::PoleAtPoint);
        }
        if mag.is_zero() {
            return Ok(());
        }
        let guard_exp = (self.bits * 3 / 4) as i64;
        let ve = v.exponent().unwrap_or(0) as i64;
        let me = mag.exponent().unwrap_or(0) as i64;
        if ve < me - guard_exp {
            return Err(EvalError::PoleAtPoint);
        }
        Ok(())
    }
}

fn max_abs(a: &BigFloat, b: &BigFloat) -> BigFloat {
    if a.abs_cmp(b).unwrap_or(0) >= 0 {
        a.abs()
    } else {
        b.abs()
    }
}

/// Value of `e` at `point`, computed with `digits` decimal digits.
pub fn evaluate_numeric(e: &Expr, point: &Point, digits: u32) -> Result<HpFloat, EvalError> {
    let mut ev = Evaluator::new(digits.max(30));
    ev.eval(e, point).map(|(v, _)| HpFloat(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_of_quintic() {
        let e = (12 * Expr::x().powi(5)).recip();
        let v = evaluate_numeric(&e, &Point::new().with_int("x", 1), 60).unwrap();
        assert!((v.to_f64() - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn pole_is_reported() {
        let x = Expr::x();
        let e = (&x - &x).recip();
        assert_eq!(evaluate_numeric(&e, &Point::new().with_int("x", 3), 40).unwrap_err(), EvalError::PoleAtPoint);
    }

    #[test]
    fn real_roots() {
        let e = Expr::rat_pow(Expr::x(), BigRational::new(1.into(), 3.into()));
        let v = evaluate_numeric(&e, &Point::new().with_int("x", -8), 40).unwrap();
        assert!((v.to_f64() + 2.0).abs() < 1e-15);
        let s = Expr::rat_pow(Expr::x(), BigRational::new(1.into(), 2.into()));
        assert!(evaluate_numeric(&s, &Point::new().with_int("x", -4), 40).is_err());
    }

    #[test]
    fn unbound_symbol() {
        let e = Expr::param("a");
        assert!(matches!(evaluate_numeric(&e, &Point::new(), 30), Err(EvalError::Unbound(_))));
    }
}
