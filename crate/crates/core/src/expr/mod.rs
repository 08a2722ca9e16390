//! Symbolic expressions over `x`, `y`, `p` and named parameters.

pub mod gcd;
pub mod numeric;
pub mod poly;
mod print;
pub mod ratfn;
pub mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use numeric::{evaluate_numeric, EvalError, HpFloat, Point};
pub use ratfn::{RatFn, Symbol};
pub use zero::{is_identically_zero, Verdict, ZeroTestConfig, ZeroVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    /// `y'`, present only before coefficient extraction.
    P,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::P => "p",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            _ => return None,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("division by an identically zero expression")]
    DivisionByZero,
    #[error("substitution makes a denominator vanish identically")]
    DegenerateSubstitution,
    #[error("logarithm of zero")]
    LogOfZero,
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Num(BigRational),
    Var(Var),
    Param(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i64),
    /// Rational power with a non-integer exponent.
    RatPow(Expr, BigRational),
    Func(Func, Expr),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(q: BigRational) -> Expr {
        Expr(Arc::new(Node::Num(q)))
    }

    pub fn int(n: i64) -> Expr {
        Self::num(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Self::num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Self::int(0)
    }

    pub fn one() -> Expr {
        Self::int(1)
    }

    pub fn var(v: Var) -> Expr {
        Expr(Arc::new(Node::Var(v)))
    }

    pub fn x() -> Expr {
        Self::var(Var::X)
    }

    pub fn y() -> Expr {
        Self::var(Var::Y)
    }

    pub fn p() -> Expr {
        Self::var(Var::P)
    }

    pub fn param(name: &str) -> Expr {
        Expr(Arc::new(Node::Param(Arc::from(name))))
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        self.as_num().is_some_and(Zero::is_zero)
    }

    pub fn is_one_literal(&self) -> bool {
        self.as_num().is_some_and(One::is_one)
    }

    /// Flattening sum; numeric terms are folded into one constant.
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut konst = BigRational::zero();
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            match t.node() {
                Node::Num(q) => konst += q,
                Node::Add(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Num(q) => konst += q,
                            _ => out.push(u.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if !konst.is_zero() {
            out.push(Self::num(konst));
        }
        match out.len() {
            0 => Self::zero(),
            1 => out.pop().unwrap(),
            _ => Expr(Arc::new(Node::Add(out))),
        }
    }

    /// Flattening product; the folded constant leads.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut konst = BigRational::one();
        let mut out = Vec::with_capacity(factors.len() + 1);
        out.push(Self::one());
        for f in factors {
            match f.node() {
                Node::Num(q) => konst *= q,
                Node::Mul(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Num(q) => konst *= q,
                            _ => out.push(u.clone()),
                        }
                    }
                }
                _ => out.push(f),
            }
        }
        if konst.is_zero() {
            return Self::zero();
        }
        if konst.is_one() {
            out.remove(0);
        } else {
            out[0] = Self::num(konst);
        }
        match out.len() {
            0 => Self::one(),
            1 => out.pop().unwrap(),
            _ => Expr(Arc::new(Node::Mul(out))),
        }
    }

    pub fn pow(base: Expr, k: i64) -> Expr {
        if k == 0 {
            return Self::one();
        }
        if k == 1 {
            return base;
        }
        if let Node::Num(q) = base.node() {
            if !q.is_zero() || k > 0 {
                return Self::num(num_traits::pow::Pow::pow(q, k as i32));
            }
        }
        if let Node::Pow(b, j) = base.node() {
            return Self::pow(b.clone(), j * k);
        }
        Expr(Arc::new(Node::Pow(base, k)))
    }

    pub fn rat_pow(base: Expr, q: BigRational) -> Expr {
        if q.is_integer() {
            return Self::pow(base, q.to_integer().to_i64().expect("exponent fits in i64"));
        }
        if let Node::Num(c) = base.node() {
            if let Ok(r) = RatFn::from_rational(c).rat_pow(&q) {
                if let Some(v) = r.as_rational() {
                    return Self::num(v);
                }
            }
        }
        Expr(Arc::new(Node::RatPow(base, q)))
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if arg.is_zero_literal() {
            match f {
                Func::Sin => return Self::zero(),
                Func::Cos | Func::Exp => return Self::one(),
                Func::Ln => {}
            }
        }
        if f == Func::Ln && arg.is_one_literal() {
            return Self::zero();
        }
        Expr(Arc::new(Node::Func(f, arg)))
    }

    pub fn sin(arg: Expr) -> Expr {
        Self::func(Func::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        Self::func(Func::Cos, arg)
    }

    pub fn exp(arg: Expr) -> Expr {
        Self::func(Func::Exp, arg)
    }

    pub fn ln(arg: Expr) -> Expr {
        Self::func(Func::Ln, arg)
    }

    pub fn recip(&self) -> Expr {
        Self::pow(self.clone(), -1)
    }

    pub fn powi(&self, k: i64) -> Expr {
        Self::pow(self.clone(), k)
    }

    /// Partial derivative by the usual rules; the result is not normalized.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Param(_) => Self::zero(),
            Node::Var(v) => Self::int((*v == var) as i64),
            Node::Add(ts) => Self::add(ts.iter().map(|t| t.differentiate(var)).collect()),
            Node::Mul(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for i in 0..fs.len() {
                    let d = fs[i].differentiate(var);
                    if d.is_zero_literal() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = fs.clone();
                    prod[i] = d;
                    terms.push(Self::mul(prod));
                }
                Self::add(terms)
            }
            Node::Pow(b, k) => {
                let db = b.differentiate(var);
                if db.is_zero_literal() {
                    return Self::zero();
                }
                Self::mul(vec![Self::int(*k), Self::pow(b.clone(), k - 1), db])
            }
            Node::RatPow(b, q) => {
                let db = b.differentiate(var);
                if db.is_zero_literal() {
                    return Self::zero();
                }
                Self::mul(vec![Self::num(q.clone()), Self::rat_pow(b.clone(), q - BigRational::one()), db])
            }
            Node::Func(f, u) => {
                let du = u.differentiate(var);
                if du.is_zero_literal() {
                    return Self::zero();
                }
                let outer = match f {
                    Func::Sin => Self::cos(u.clone()),
                    Func::Cos => -Self::sin(u.clone()),
                    Func::Exp => self.clone(),
                    Func::Ln => u.recip(),
                };
                Self::mul(vec![outer, du])
            }
        }
    }

    /// Canonical rational-function form.
    pub fn to_ratfn(&self) -> Result<RatFn, ExprError> {
        Ok(match self.node() {
            Node::Num(q) => RatFn::from_rational(q),
            Node::Var(v) => RatFn::var(*v),
            Node::Param(n) => RatFn::param(n),
            Node::Add(ts) => {
                let mut acc = RatFn::zero();
                for t in ts {
                    acc = acc.add(&t.to_ratfn()?);
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = RatFn::one();
                for f in fs {
                    acc = acc.mul(&f.to_ratfn()?);
                }
                acc
            }
            Node::Pow(b, k) => b.to_ratfn()?.powi(*k)?,
            Node::RatPow(b, q) => b.to_ratfn()?.rat_pow(q)?,
            Node::Func(f, u) => RatFn::apply(*f, u.to_ratfn()?)?,
        })
    }

    /// Canonical form as an expression. Fails only when a subexpression
    /// divides by something identically zero.
    pub fn try_normalize(&self) -> Result<Expr, ExprError> {
        Ok(self.to_ratfn()?.to_expr())
    }

    /// Canonical form; expressions that divide by zero are returned as is.
    pub fn normalize(&self) -> Expr {
        self.try_normalize().unwrap_or_else(|_| self.clone())
    }

    /// Simultaneous substitution followed by normalization.
    pub fn substitute(&self, bindings: &Bindings) -> Result<Expr, ExprError> {
        let replaced = self.replace(bindings);
        replaced.to_ratfn().map(|r| r.to_expr()).map_err(|e| match e {
            ExprError::DivisionByZero => ExprError::DegenerateSubstitution,
            other => other,
        })
    }

    /// Simultaneous structural replacement without normalization.
    pub fn replace(&self, bindings: &Bindings) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(v) => bindings.get(&SymbolName::Var(*v)).cloned().unwrap_or_else(|| self.clone()),
            Node::Param(n) => bindings.get(&SymbolName::Param(n.clone())).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(ts) => Self::add(ts.iter().map(|t| t.replace(bindings)).collect()),
            Node::Mul(fs) => Self::mul(fs.iter().map(|f| f.replace(bindings)).collect()),
            Node::Pow(b, k) => Self::pow(b.replace(bindings), *k),
            Node::RatPow(b, q) => Self::rat_pow(b.replace(bindings), q.clone()),
            Node::Func(f, u) => Self::func(*f, u.replace(bindings)),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<SymbolName> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<SymbolName>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Var(v) => {
                out.insert(SymbolName::Var(*v));
            }
            Node::Param(n) => {
                out.insert(SymbolName::Param(n.clone()));
            }
            Node::Add(ts) | Node::Mul(ts) => ts.iter().for_each(|t| t.collect_symbols(out)),
            Node::Pow(b, _) | Node::RatPow(b, _) | Node::Func(_, b) => b.collect_symbols(out),
        }
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.free_symbols().contains(&SymbolName::Var(v))
    }

    /// Number of nodes, counting shared subtrees repeatedly.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Num(_) | Node::Var(_) | Node::Param(_) => 0,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().map(Expr::size).sum(),
            Node::Pow(b, _) | Node::RatPow(b, _) | Node::Func(_, b) => b.size(),
        }
    }

    pub fn is_negative_term(&self) -> bool {
        match self.node() {
            Node::Num(q) => q.is_negative(),
            Node::Mul(fs) => fs[0].as_num().is_some_and(Signed::is_negative),
            _ => false,
        }
    }
}

/// Name of a free symbol: one of the variables or a parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolName {
    Var(Var),
    Param(Arc<str>),
}

impl SymbolName {
    pub fn parse(name: &str) -> SymbolName {
        match name {
            "x" => SymbolName::Var(Var::X),
            "y" => SymbolName::Var(Var::Y),
            "p" => SymbolName::Var(Var::P),
            other => SymbolName::Param(Arc::from(other)),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            SymbolName::Var(v) => v.name(),
            SymbolName::Param(n) => n,
        }
    }
}

impl std::fmt::Display for SymbolName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Bindings = BTreeMap<SymbolName, Expr>;

pub fn differentiate(e: &Expr, var: Var) -> Expr {
    e.differentiate(var)
}

pub fn normalize(e: &Expr) -> Expr {
    e.normalize()
}

pub fn substitute(e: &Expr, bindings: &Bindings) -> Result<Expr, ExprError> {
    e.substitute(bindings)
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<BigRational> for Expr {
    fn from(q: BigRational) -> Expr {
        Expr::num(q)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::int(rhs))
            }
        }
        impl ops::$tr<Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::int(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, Expr::mul(vec![Expr::int(-1), b])]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, Expr::pow(b, -1)]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}
