//! Canonical rational functions over named symbols.
//!
//! A [`RatFn`] is `num/den` with integer-coefficient polynomials over a
//! sorted, pruned list of [`Symbol`]s. Canonical form:
//!
//! * `gcd(num, den) = 1` and `den` has a positive leading coefficient;
//! * `num` has degree at most one in every `cos(u)` symbol (`cos^2 u` is
//!   rewritten to `1 - sin^2 u`), and `den` contains no `cos(u)` at all;
//! * the symbol list holds exactly the symbols used (plus `sin(u)` whenever
//!   `cos(u)` is present).
//!
//! With cosines kept out of the denominator every element of the field has a
//! unique representation, so structural equality is mathematical equality
//! (atoms other than the sin/cos pairs are independent indeterminates).

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use super::gcd::gcd;
use super::poly::{integer_root, Exps, Poly};
use super::{Expr, ExprError, Func, Var};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    X,
    Y,
    P,
    Param(Arc<str>),
    Atom(Arc<Atom>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Sin,
    Cos,
    Exp,
    Ln,
    /// `arg^(1/n)`
    Root(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub kind: AtomKind,
    pub arg: RatFn,
}

impl Symbol {
    fn atom(kind: AtomKind, arg: RatFn) -> Symbol {
        Symbol::Atom(Arc::new(Atom { kind, arg }))
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Symbol::Atom(_))
    }

    fn cos_arg(&self) -> Option<&RatFn> {
        match self {
            Symbol::Atom(a) if a.kind == AtomKind::Cos => Some(&a.arg),
            _ => None,
        }
    }

    /// Expression for `self^e`.
    pub fn pow_expr(&self, e: u32) -> Expr {
        let base = match self {
            Symbol::X => Expr::var(Var::X),
            Symbol::Y => Expr::var(Var::Y),
            Symbol::P => Expr::var(Var::P),
            Symbol::Param(n) => Expr::param(n),
            Symbol::Atom(a) => match a.kind {
                AtomKind::Sin => Expr::func(Func::Sin, a.arg.to_expr()),
                AtomKind::Cos => Expr::func(Func::Cos, a.arg.to_expr()),
                AtomKind::Exp => Expr::func(Func::Exp, a.arg.to_expr()),
                AtomKind::Ln => Expr::func(Func::Ln, a.arg.to_expr()),
                // `(u^(1/n))^e`, not `u^(e/n)`: the reduced exponent would
                // re-parse as a different root.
                AtomKind::Root(n) => Expr::rat_pow(a.arg.to_expr(), BigRational::new(BigInt::one(), BigInt::from(n))),
            },
        };
        Expr::pow(base, e as i64)
    }

    /// Partial derivative of the symbol, `None` when it vanishes.
    fn derivative(&self, var: Var) -> Option<RatFn> {
        match (self, var) {
            (Symbol::X, Var::X) | (Symbol::Y, Var::Y) => Some(RatFn::one()),
            (Symbol::Atom(a), _) => {
                let du = a.arg.diff(var);
                if du.is_zero() {
                    return None;
                }
                let d = match a.kind {
                    AtomKind::Sin => RatFn::symbol(Symbol::atom(AtomKind::Cos, a.arg.clone())).mul(&du),
                    AtomKind::Cos => RatFn::symbol(Symbol::atom(AtomKind::Sin, a.arg.clone())).mul(&du).neg(),
                    AtomKind::Exp => RatFn::symbol(self.clone()).mul(&du),
                    AtomKind::Ln => du.div(&a.arg).expect("logarithm argument is nonzero"),
                    AtomKind::Root(n) => RatFn::symbol(self.clone())
                        .mul(&du)
                        .div(&a.arg.mul(&RatFn::from_int(n as i64)))
                        .expect("root argument is nonzero"),
                };
                Some(d)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pow_expr(1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatFn {
    vars: Arc<[Symbol]>,
    num: Poly,
    den: Poly,
}

fn empty_vars() -> Arc<[Symbol]> {
    Arc::from(Vec::<Symbol>::new())
}

/// `(cos index, sin index)` for every cosine symbol in a sorted symbol list.
fn trig_pairs(vars: &[Symbol]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, s) in vars.iter().enumerate() {
        if let Some(arg) = s.cos_arg() {
            let j = vars
                .iter()
                .position(|t| matches!(t, Symbol::Atom(a) if a.kind == AtomKind::Sin && &a.arg == arg))
                .expect("sin partner present alongside cos");
            out.push((i, j));
        }
    }
    out
}

/// Rewrites `cos^k` with `k >= 2` using `cos^2 = 1 - sin^2`.
fn reduce_trig(p: &Poly, pairs: &[(usize, usize)]) -> Poly {
    let mut p = Cow::Borrowed(p);
    for &(c, s) in pairs {
        if p.degree(c) < 2 {
            continue;
        }
        let n = p.nvars();
        let mut acc: Vec<(Exps, BigInt)> = Vec::with_capacity(p.nterms() * 2);
        for (e, coef) in p.terms() {
            let k = e[c] / 2;
            if k == 0 {
                acc.push((e.clone(), coef.clone()));
                continue;
            }
            // (1 - s^2)^k = sum_j C(k, j) (-1)^j s^(2j)
            let mut binom = BigInt::one();
            for j in 0..=k {
                let mut e2 = e.clone();
                e2[c] -= 2 * k;
                e2[s] += 2 * j;
                let sign = if j % 2 == 1 { -1 } else { 1 };
                acc.push((e2, coef * &binom * sign));
                binom = binom * BigInt::from(k - j) / BigInt::from(j + 1);
            }
        }
        p = Cow::Owned(Poly::from_terms(n, acc));
    }
    p.into_owned()
}

/// Aligns two symbol lists, returning the merged list and index maps.
fn merge_vars(a: &Arc<[Symbol]>, b: &Arc<[Symbol]>) -> (Arc<[Symbol]>, Vec<usize>, Vec<usize>) {
    let mut merged: Vec<Symbol> = Vec::with_capacity(a.len() + b.len());
    let (mut ma, mut mb) = (Vec::with_capacity(a.len()), Vec::with_capacity(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, _) => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                ma.push(merged.len());
                merged.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                mb.push(merged.len());
                merged.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                ma.push(merged.len());
                mb.push(merged.len());
                merged.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    (Arc::from(merged), ma, mb)
}

struct Aligned<'a> {
    vars: Arc<[Symbol]>,
    an: Cow<'a, Poly>,
    ad: Cow<'a, Poly>,
    bn: Cow<'a, Poly>,
    bd: Cow<'a, Poly>,
}

fn align<'a>(a: &'a RatFn, b: &'a RatFn) -> Aligned<'a> {
    if Arc::ptr_eq(&a.vars, &b.vars) || a.vars == b.vars {
        return Aligned {
            vars: a.vars.clone(),
            an: Cow::Borrowed(&a.num),
            ad: Cow::Borrowed(&a.den),
            bn: Cow::Borrowed(&b.num),
            bd: Cow::Borrowed(&b.den),
        };
    }
    let (vars, ma, mb) = merge_vars(&a.vars, &b.vars);
    let n = vars.len();
    Aligned {
        an: Cow::Owned(a.num.remap(n, &ma)),
        ad: Cow::Owned(a.den.remap(n, &ma)),
        bn: Cow::Owned(b.num.remap(n, &mb)),
        bd: Cow::Owned(b.den.remap(n, &mb)),
        vars,
    }
}

impl RatFn {
    pub fn zero() -> RatFn {
        RatFn { vars: empty_vars(), num: Poly::zero(0), den: Poly::one(0) }
    }

    pub fn one() -> RatFn {
        Self::from_int(1)
    }

    pub fn from_int(c: i64) -> RatFn {
        Self::from_bigint(BigInt::from(c))
    }

    pub fn from_bigint(c: BigInt) -> RatFn {
        RatFn { vars: empty_vars(), num: Poly::constant(c, 0), den: Poly::one(0) }
    }

    pub fn from_rational(q: &BigRational) -> RatFn {
        RatFn {
            vars: empty_vars(),
            num: Poly::constant(q.numer().clone(), 0),
            den: Poly::constant(q.denom().clone(), 0),
        }
    }

    pub fn ratio(n: i64, d: i64) -> RatFn {
        Self::from_rational(&BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn symbol(s: Symbol) -> RatFn {
        let mut vars = vec![s.clone()];
        if let Some(arg) = s.cos_arg() {
            vars.push(Symbol::atom(AtomKind::Sin, arg.clone()));
            vars.sort();
        }
        let n = vars.len();
        let idx = vars.iter().position(|v| v == &s).unwrap();
        RatFn { vars: Arc::from(vars), num: Poly::var(idx, n), den: Poly::one(n) }
    }

    pub fn var(v: Var) -> RatFn {
        Self::symbol(match v {
            Var::X => Symbol::X,
            Var::Y => Symbol::Y,
            Var::P => Symbol::P,
        })
    }

    pub fn param(name: &str) -> RatFn {
        Self::symbol(Symbol::Param(Arc::from(name)))
    }

    /// Applies a transcendental function, folding the trivial values.
    pub fn apply(f: Func, arg: RatFn) -> Result<RatFn, ExprError> {
        if arg.is_zero() {
            return match f {
                Func::Sin => Ok(RatFn::zero()),
                Func::Cos | Func::Exp => Ok(RatFn::one()),
                Func::Ln => Err(ExprError::LogOfZero),
            };
        }
        if f == Func::Ln && arg == RatFn::one() {
            return Ok(RatFn::zero());
        }
        let kind = match f {
            Func::Sin => AtomKind::Sin,
            Func::Cos => AtomKind::Cos,
            Func::Exp => AtomKind::Exp,
            Func::Ln => AtomKind::Ln,
        };
        Ok(RatFn::symbol(Symbol::atom(kind, arg)))
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    /// Polynomial `num` over the given symbols, brought to canonical form.
    pub fn from_parts(vars: &[Symbol], num: Poly) -> RatFn {
        let n = vars.len();
        Self::finish(Arc::from(vars.to_vec()), num, Poly::one(n), true)
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if !self.is_constant() {
            return None;
        }
        let n = self.num.constant_value()?;
        let d = self.den.constant_value()?;
        Some(BigRational::new(n, d))
    }

    pub fn has_atoms(&self) -> bool {
        self.vars.iter().any(Symbol::is_atom)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        !self.diff(v).is_zero()
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.vars.contains(s)
    }

    fn finish(vars: Arc<[Symbol]>, mut num: Poly, mut den: Poly, mut need_gcd: bool) -> RatFn {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RatFn::zero();
        }
        let pairs = if vars.iter().any(Symbol::is_atom) { trig_pairs(&vars) } else { Vec::new() };
        if !pairs.is_empty() {
            for &(c, _) in &pairs {
                if den.uses_var(c) {
                    let conj = den.negate_var(c);
                    num = num.mul(&conj);
                    den = reduce_trig(&den.mul(&conj), &pairs);
                    need_gcd = true;
                }
            }
            if pairs.iter().any(|&(c, _)| num.degree(c) >= 2) {
                num = reduce_trig(&num, &pairs);
                need_gcd = true;
            }
            if num.is_zero() {
                return RatFn::zero();
            }
        }
        if need_gcd && !den.is_one() {
            let g = gcd(&num, &den);
            if !g.is_one() {
                num = num.exact_div(&g).expect("gcd divides numerator");
                den = den.exact_div(&g).expect("gcd divides denominator");
            }
        }
        if den.lc().is_negative() {
            num = num.neg();
            den = den.neg();
        }
        Self::prune(vars, num, den)
    }

    fn prune(vars: Arc<[Symbol]>, num: Poly, den: Poly) -> RatFn {
        let mut used = num.used_vars();
        for (u, d) in used.iter_mut().zip(den.used_vars()) {
            *u |= d;
        }
        if used.iter().all(|&u| u) {
            return RatFn { vars, num, den };
        }
        for (c, s) in trig_pairs(&vars) {
            if used[c] {
                used[s] = true;
            }
        }
        let mut map = vec![usize::MAX; vars.len()];
        let mut kept = Vec::new();
        for (i, s) in vars.iter().enumerate() {
            if used[i] {
                map[i] = kept.len();
                kept.push(s.clone());
            }
        }
        let n = kept.len();
        let shrink = |p: &Poly| -> Poly {
            let terms = p
                .terms()
                .iter()
                .map(|(e, c)| {
                    let e2: Exps = e.iter().zip(used.iter()).filter(|(_, &u)| u).map(|(x, _)| *x).collect();
                    (e2, c.clone())
                })
                .collect();
            // Dropping variables that are zero in every term preserves order.
            Poly::from_sorted(n, terms)
        };
        RatFn { num: shrink(&num), den: shrink(&den), vars: Arc::from(kept) }
    }

    fn no_trig(vars: &[Symbol]) -> bool {
        !vars.iter().any(|s| s.cos_arg().is_some())
    }

    pub fn neg(&self) -> RatFn {
        RatFn { vars: self.vars.clone(), num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let Aligned { vars, an, ad, bn, bd } = align(self, other);
        if ad == bd {
            let num = an.add(&bn);
            return Self::finish(vars, num, ad.into_owned(), true);
        }
        if Self::no_trig(&vars) {
            let g = gcd(&ad, &bd);
            if g.is_one() {
                let num = an.mul(&bd).add(&bn.mul(&ad));
                return Self::finish(vars, num, ad.mul(&bd), false);
            }
            let ad_g = ad.exact_div(&g).unwrap();
            let bd_g = bd.exact_div(&g).unwrap();
            let mut num = an.mul(&bd_g).add(&bn.mul(&ad_g));
            let mut den = ad.mul(&bd_g);
            if num.is_zero() {
                return RatFn::zero();
            }
            let h = gcd(&num, &g);
            if !h.is_one() {
                num = num.exact_div(&h).unwrap();
                den = den.exact_div(&h).unwrap();
            }
            return Self::finish(vars, num, den, false);
        }
        let num = an.mul(&bd).add(&bn.mul(&ad));
        Self::finish(vars, num, ad.mul(&bd), true)
    }

    pub fn sub(&self, other: &RatFn) -> RatFn {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        if self.is_zero() || other.is_zero() {
            return RatFn::zero();
        }
        let Aligned { vars, an, ad, bn, bd } = align(self, other);
        if Self::no_trig(&vars) {
            let g1 = gcd(&an, &bd);
            let g2 = gcd(&bn, &ad);
            let (an, bd) = if g1.is_one() {
                (an, bd)
            } else {
                (Cow::Owned(an.exact_div(&g1).unwrap()), Cow::Owned(bd.exact_div(&g1).unwrap()))
            };
            let (bn, ad) = if g2.is_one() {
                (bn, ad)
            } else {
                (Cow::Owned(bn.exact_div(&g2).unwrap()), Cow::Owned(ad.exact_div(&g2).unwrap()))
            };
            return Self::finish(vars, an.mul(&bn), ad.mul(&bd), false);
        }
        Self::finish(vars, an.mul(&bn), ad.mul(&bd), true)
    }

    pub fn scale(&self, q: &BigRational) -> RatFn {
        self.mul(&RatFn::from_rational(q))
    }

    pub fn inv(&self) -> Result<RatFn, ExprError> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        let need = !Self::no_trig(&self.vars);
        Ok(Self::finish(self.vars.clone(), self.den.clone(), self.num.clone(), need))
    }

    pub fn div(&self, other: &RatFn) -> Result<RatFn, ExprError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn powi(&self, n: i64) -> Result<RatFn, ExprError> {
        if n < 0 {
            return self.inv()?.powi(-n);
        }
        if n == 0 {
            return Ok(RatFn::one());
        }
        let n = n as u32;
        let need = !Self::no_trig(&self.vars);
        Ok(Self::finish(self.vars.clone(), self.num.pow(n), self.den.pow(n), need))
    }

    /// `self^q` for rational `q`: exact when a perfect power, otherwise a
    /// root atom.
    pub fn rat_pow(&self, q: &BigRational) -> Result<RatFn, ExprError> {
        let m = q.numer().to_i64().expect("exponent numerator fits in i64");
        let n = q.denom().to_u32().expect("root index fits in u32");
        if n == 1 {
            return self.powi(m);
        }
        if self.is_zero() {
            return if m > 0 { Ok(RatFn::zero()) } else { Err(ExprError::DivisionByZero) };
        }
        let (outside, mut inside) = self.split_root(n);
        if inside.is_one() {
            return outside.powi(m);
        }
        let mut n = n;
        let mut d = n;
        while d > 1 {
            if n.is_multiple_of(d) {
                if let Some(r) = inside.exact_root(d) {
                    inside = r;
                    n /= d;
                    d = n;
                    continue;
                }
            }
            d -= 1;
        }
        let root = if n == 1 { inside } else { RatFn::symbol(Symbol::atom(AtomKind::Root(n), inside)) };
        outside.mul(&root).powi(m)
    }

    /// Exact `n`-th root when numerator and denominator are perfect powers.
    /// Factors `1 - sin^2 u` are read as `cos^2 u`.
    pub fn exact_root(&self, n: u32) -> Option<RatFn> {
        let nv = self.vars.len();
        let sines: Vec<(usize, RatFn)> = self
            .vars
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Symbol::Atom(a) if a.kind == AtomKind::Sin => Some((i, a.arg.clone())),
                _ => None,
            })
            .collect();
        let root_part = |p: &Poly| -> Option<RatFn> {
            let mut rest = p.clone();
            let mut out = RatFn::one();
            for (s, arg) in &sines {
                let mut e: Exps = SmallVec::from_elem(0, nv);
                e[*s] = 2;
                let one_minus_s2 = Poly::one(nv).sub(&Poly::monomial(e, BigInt::one()));
                let mut k = 0u32;
                while let Some(q) = rest.exact_div(&one_minus_s2) {
                    rest = q;
                    k += 1;
                }
                if !(2 * k).is_multiple_of(n) {
                    return None;
                }
                let c = RatFn::symbol(Symbol::atom(AtomKind::Cos, arg.clone()));
                out = out.mul(&c.powi((2 * k / n) as i64).ok()?);
            }
            let r = rest.exact_root(n)?;
            Some(out.mul(&RatFn::finish(self.vars.clone(), r, Poly::one(nv), true)))
        };
        // Even roots may need the sign moved from numerator to denominator.
        let (num, den) = match (root_part(&self.num), root_part(&self.den)) {
            (Some(a), Some(b)) => (a, b),
            _ => (root_part(&self.num.neg())?, root_part(&self.den.neg())?),
        };
        num.div(&den).ok()
    }

    /// Splits `self = outside^n * inside` by pulling perfect powers out of
    /// monomial numerators and denominators and out of integer contents.
    pub fn split_root(&self, n: u32) -> (RatFn, RatFn) {
        if let Some(r) = self.exact_root(n) {
            return (r, RatFn::one());
        }
        let split_poly = |p: &Poly| -> (Poly, Poly) {
            let nv = p.nvars();
            if !p.is_monomial() {
                let c = p.content();
                let (co, ci) = split_integer(&c, n);
                let _ = ci;
                let inner = p.div_scalar(&co.pow(n));
                return (Poly::constant(co, nv), inner);
            }
            let (e, c) = &p.terms()[0];
            let sign = if c.is_negative() { -1 } else { 1 };
            let (co, ci) = split_integer(&c.abs(), n);
            let eo: Exps = e.iter().map(|x| x / n as u16).collect();
            let ei: Exps = e.iter().map(|x| x % n as u16).collect();
            (Poly::monomial(eo, co), Poly::monomial(ei, ci * sign))
        };
        let (no, ni) = split_poly(&self.num);
        let (dout, di) = split_poly(&self.den);
        let outside = RatFn::finish(self.vars.clone(), no, dout, true);
        let inside = RatFn::finish(self.vars.clone(), ni, di, true);
        (outside, inside)
    }

    /// Partial derivative with respect to `x` or `y`.
    pub fn diff(&self, var: Var) -> RatFn {
        if self.vars.is_empty() {
            return RatFn::zero();
        }
        let derivs: Vec<Option<RatFn>> = self.vars.iter().map(|s| s.derivative(var)).collect();
        if derivs.iter().all(Option::is_none) {
            return RatFn::zero();
        }
        let nv = self.vars.len();
        // Fast path: every symbol derivative is a polynomial in our own symbols.
        let mut poly_derivs: Vec<Option<Poly>> = Vec::with_capacity(nv);
        let mut polynomial = true;
        for d in &derivs {
            match d {
                None => poly_derivs.push(None),
                Some(d) if d.den.is_one() => {
                    let map: Option<Vec<usize>> =
                        d.vars.iter().map(|s| self.vars.iter().position(|t| t == s)).collect();
                    match map {
                        Some(m) => poly_derivs.push(Some(d.num.remap(nv, &m))),
                        None => {
                            polynomial = false;
                            break;
                        }
                    }
                }
                Some(_) => {
                    polynomial = false;
                    break;
                }
            }
        }
        if polynomial {
            let total = |p: &Poly| -> Poly {
                let mut acc = Poly::zero(nv);
                for (i, d) in poly_derivs.iter().enumerate() {
                    if let Some(d) = d {
                        if p.uses_var(i) {
                            acc = acc.add(&p.partial(i).mul(d));
                        }
                    }
                }
                acc
            };
            let dn = total(&self.num);
            if self.den.is_constant() {
                return Self::finish(self.vars.clone(), dn, self.den.clone(), !Self::no_trig(&self.vars));
            }
            let dd = total(&self.den);
            let g = gcd(&self.den, &dd);
            let d_g = self.den.exact_div(&g).unwrap();
            let dd_g = dd.exact_div(&g).unwrap();
            let mut num = dn.mul(&d_g).sub(&self.num.mul(&dd_g));
            let mut den = self.den.mul(&d_g);
            if num.is_zero() {
                return RatFn::zero();
            }
            if Self::no_trig(&self.vars) {
                // Only factors of g that the derivative did not touch can
                // survive in common with the new numerator.
                let h = gcd(&num, &g);
                if !h.is_one() {
                    num = num.exact_div(&h).unwrap();
                    den = den.exact_div(&h).unwrap();
                }
                return Self::finish(self.vars.clone(), num, den, false);
            }
            return Self::finish(self.vars.clone(), num, den, true);
        }
        // General path through field arithmetic.
        let total = |p: &Poly| -> RatFn {
            let mut acc = RatFn::zero();
            for (i, d) in derivs.iter().enumerate() {
                if let Some(d) = d {
                    if p.uses_var(i) {
                        let part = Self::finish(self.vars.clone(), p.partial(i), Poly::one(nv), true);
                        acc = acc.add(&part.mul(d));
                    }
                }
            }
            acc
        };
        let n = Self::finish(self.vars.clone(), self.num.clone(), Poly::one(nv), true);
        let d = Self::finish(self.vars.clone(), self.den.clone(), Poly::one(nv), true);
        let dn = total(&self.num);
        let dd = total(&self.den);
        dn.mul(&d).sub(&n.mul(&dd)).div(&d.mul(&d)).expect("denominator is nonzero")
    }

    /// Substitutes field elements for symbols (simultaneously).
    pub fn substitute(&self, f: &dyn Fn(&Symbol) -> Option<RatFn>) -> Result<RatFn, ExprError> {
        let images: Vec<RatFn> = self
            .vars
            .iter()
            .map(|s| match f(s) {
                Some(r) => Ok(r),
                None => match s {
                    Symbol::Atom(a) => {
                        let arg = a.arg.substitute(f)?;
                        match a.kind {
                            AtomKind::Sin => RatFn::apply(Func::Sin, arg),
                            AtomKind::Cos => RatFn::apply(Func::Cos, arg),
                            AtomKind::Exp => RatFn::apply(Func::Exp, arg),
                            AtomKind::Ln => RatFn::apply(Func::Ln, arg),
                            AtomKind::Root(n) => arg.rat_pow(&BigRational::new(BigInt::one(), BigInt::from(n))),
                        }
                    }
                    _ => Ok(RatFn::symbol(s.clone())),
                },
            })
            .collect::<Result<_, _>>()?;
        let eval = |p: &Poly| -> RatFn {
            let mut acc = RatFn::zero();
            for (e, c) in p.terms() {
                let mut t = RatFn::from_bigint(c.clone());
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        t = t.mul(&images[i].powi(k as i64).expect("nonnegative power"));
                    }
                }
                acc = acc.add(&t);
            }
            acc
        };
        let num = eval(&self.num);
        let den = eval(&self.den);
        if den.is_zero() {
            return Err(ExprError::DegenerateSubstitution);
        }
        num.div(&den)
    }

    /// Rewrites `root(u, n)^k` with `k >= n` as `u^(k div n) root(u, n)^(k mod n)`
    /// in numerator and denominator.
    pub fn reduce_roots(&self) -> RatFn {
        let roots: Vec<(Symbol, u32, RatFn)> = self
            .vars
            .iter()
            .filter_map(|s| match s {
                Symbol::Atom(a) => match a.kind {
                    AtomKind::Root(n) => Some((s.clone(), n, a.arg.clone())),
                    _ => None,
                },
                _ => None,
            })
            .collect();
        if roots.is_empty() {
            return self.clone();
        }
        let part = |p: &Poly| -> RatFn {
            let mut out = Self::from_parts(&self.vars, p.clone());
            for (sym, n, arg) in &roots {
                let Some(cs) = out.coefficients_in(sym) else { continue };
                if cs.len() <= *n as usize {
                    continue;
                }
                let rho = RatFn::symbol(sym.clone());
                let mut acc = RatFn::zero();
                for (k, c) in cs.iter().enumerate() {
                    let (q, r) = (k as u32 / n, k as u32 % n);
                    let lift = arg.powi(q as i64).expect("root argument is nonzero");
                    acc = acc.add(&c.mul(&lift).mul(&rho.powi(r as i64).expect("positive power")));
                }
                out = acc;
            }
            out
        };
        part(&self.num).div(&part(&self.den)).expect("denominator is nonzero")
    }

    /// Coefficients of `num` by degree in the given symbol, over the
    /// common denominator: `self = sum_k coeff_k * sym^k`.
    pub fn coefficients_in(&self, s: &Symbol) -> Option<Vec<RatFn>> {
        let idx = match self.vars.iter().position(|t| t == s) {
            Some(i) => i,
            None => return Some(vec![self.clone()]),
        };
        if self.den.uses_var(idx) {
            return None;
        }
        let deg = self.num.degree(idx) as usize;
        let mut out = vec![RatFn::zero(); deg + 1];
        let den = Self::finish(self.vars.clone(), self.den.clone(), Poly::one(self.vars.len()), false);
        for (k, c) in self.num.coeffs_in(idx) {
            let c = Self::finish(self.vars.clone(), c, Poly::one(self.vars.len()), false);
            out[k as usize] = c.div(&den).expect("denominator is nonzero");
        }
        Some(out)
    }

    pub fn to_expr(&self) -> Expr {
        let num = poly_to_expr(&self.num, &self.vars);
        if self.den.is_one() {
            return num;
        }
        if self.den.is_monomial() {
            let (e, c) = &self.den.terms()[0];
            let mut factors = vec![num, Expr::num(BigRational::new(BigInt::one(), c.clone()))];
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    factors.push(Expr::pow(self.vars[i].pow_expr(1), -(k as i64)));
                }
            }
            return Expr::mul(factors);
        }
        Expr::mul(vec![num, Expr::pow(poly_to_expr(&self.den, &self.vars), -1)])
    }
}

fn split_integer(c: &BigInt, n: u32) -> (BigInt, BigInt) {
    if c.is_zero() {
        return (BigInt::one(), BigInt::zero());
    }
    if let Some(r) = integer_root(c, n) {
        return (r, BigInt::one());
    }
    let mut outside = BigInt::one();
    let mut inside = c.clone();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(1000);
    while p < limit {
        let pn = num_traits::pow(p.clone(), n as usize);
        while (&inside % &pn).is_zero() {
            inside /= &pn;
            outside *= &p;
        }
        p += 1;
    }
    (outside, inside)
}

fn poly_to_expr(p: &Poly, vars: &[Symbol]) -> Expr {
    let terms: Vec<Expr> = p
        .terms()
        .iter()
        .map(|(e, c)| {
            let mut factors = vec![Expr::num(BigRational::from_integer(c.clone()))];
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    factors.push(vars[i].pow_expr(k as u32));
                }
            }
            Expr::mul(factors)
        })
        .collect();
    Expr::add(terms)
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

macro_rules! ratfn_op {
    ($tr:ident, $m:ident, $f:expr) => {
        impl std::ops::$tr<&RatFn> for &RatFn {
            type Output = RatFn;
            fn $m(self, rhs: &RatFn) -> RatFn {
                let f: fn(&RatFn, &RatFn) -> RatFn = $f;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<RatFn> for &RatFn {
            type Output = RatFn;
            fn $m(self, rhs: RatFn) -> RatFn {
                std::ops::$tr::$m(self, &rhs)
            }
        }
        impl std::ops::$tr<&RatFn> for RatFn {
            type Output = RatFn;
            fn $m(self, rhs: &RatFn) -> RatFn {
                std::ops::$tr::$m(&self, rhs)
            }
        }
        impl std::ops::$tr<RatFn> for RatFn {
            type Output = RatFn;
            fn $m(self, rhs: RatFn) -> RatFn {
                std::ops::$tr::$m(&self, &rhs)
            }
        }
        impl std::ops::$tr<i64> for RatFn {
            type Output = RatFn;
            fn $m(self, rhs: i64) -> RatFn {
                std::ops::$tr::$m(&self, &RatFn::from_int(rhs))
            }
        }
        impl std::ops::$tr<i64> for &RatFn {
            type Output = RatFn;
            fn $m(self, rhs: i64) -> RatFn {
                std::ops::$tr::$m(self, &RatFn::from_int(rhs))
            }
        }
        impl std::ops::$tr<RatFn> for i64 {
            type Output = RatFn;
            fn $m(self, rhs: RatFn) -> RatFn {
                std::ops::$tr::$m(&RatFn::from_int(self), &rhs)
            }
        }
        impl std::ops::$tr<&RatFn> for i64 {
            type Output = RatFn;
            fn $m(self, rhs: &RatFn) -> RatFn {
                std::ops::$tr::$m(&RatFn::from_int(self), rhs)
            }
        }
    };
}

ratfn_op!(Add, add, |a, b| RatFn::add(a, b));
ratfn_op!(Sub, sub, |a, b| RatFn::sub(a, b));
ratfn_op!(Mul, mul, |a, b| RatFn::mul(a, b));
// Division panics on an identically zero divisor; use `RatFn::div` to
// handle that case.
ratfn_op!(Div, div, |a, b| RatFn::div(a, b).expect("division by zero rational function"));

impl std::ops::Neg for &RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        RatFn::neg(self)
    }
}

impl std::ops::Neg for RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        RatFn::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> RatFn {
        RatFn::var(Var::X)
    }
    fn y() -> RatFn {
        RatFn::var(Var::Y)
    }

    #[test]
    fn fractions_reduce() {
        // (x^2 - y^2)/(x + y) = x - y
        let num = x().mul(&x()).sub(&y().mul(&y()));
        let r = num.div(&x().add(&y())).unwrap();
        assert_eq!(r, x().sub(&y()));
        // 1/x + 1/y - (x + y)/(x y) = 0
        let a = x().inv().unwrap().add(&y().inv().unwrap());
        let b = x().add(&y()).div(&x().mul(&y())).unwrap();
        assert!(a.sub(&b).is_zero());
    }

    #[test]
    fn pythagoras_cancels() {
        let s = RatFn::apply(Func::Sin, y()).unwrap();
        let c = RatFn::apply(Func::Cos, y()).unwrap();
        let one = s.mul(&s).add(&c.mul(&c));
        assert_eq!(one, RatFn::one());
        // 1/cos has a cosine-free denominator after rationalization
        let sec = c.inv().unwrap();
        assert!(
            sec.vars().iter().all(|v| v.cos_arg().is_none())
                || !sec.denom().uses_var(sec.vars().iter().position(|v| v.cos_arg().is_some()).unwrap())
        );
        assert_eq!(sec.mul(&c), RatFn::one());
    }

    #[test]
    fn derivative_rules() {
        let s = RatFn::apply(Func::Sin, y()).unwrap();
        let c = RatFn::apply(Func::Cos, y()).unwrap();
        assert_eq!(x().mul(&s).diff(Var::Y), x().mul(&c));
        let q = x().div(&y()).unwrap();
        assert_eq!(q.diff(Var::Y), x().neg().div(&y().mul(&y())).unwrap());
        // d/dy (1/sin y) = -cos y / sin^2 y
        let csc = s.inv().unwrap();
        assert_eq!(csc.diff(Var::Y), c.neg().div(&s.mul(&s)).unwrap());
    }

    #[test]
    fn derivative_with_untouched_factor() {
        // d/dx [(x + 1 + y)/(y (x + 1))] = -1/(x + 1)^2
        let one = RatFn::one();
        let f = x().add(&one).add(&y()).div(&y().mul(&x().add(&one))).unwrap();
        let expect = x().add(&one).powi(2).unwrap().inv().unwrap().neg();
        assert_eq!(f.diff(Var::X), expect);
    }

    #[test]
    fn roots_through_pythagoras() {
        let s = RatFn::apply(Func::Sin, y()).unwrap();
        let c = RatFn::apply(Func::Cos, y()).unwrap();
        let xc = x().mul(&c);
        let r = xc.powi(10).unwrap().exact_root(10).unwrap();
        assert_eq!(r, xc);
        let xs5 = x().mul(&s).powi(5).unwrap();
        assert_eq!(xs5.exact_root(5).unwrap(), x().mul(&s));
    }

    #[test]
    fn even_root_of_a_negated_quotient() {
        let c = RatFn::apply(Func::Cos, y()).unwrap();
        let q = x().mul(&c).powi(-6).unwrap();
        assert_eq!(q.exact_root(6).unwrap(), x().mul(&c).inv().unwrap());
        let half = BigRational::new(BigInt::one(), BigInt::from(6));
        assert_eq!(q.rat_pow(&half).unwrap(), x().mul(&c).inv().unwrap());
    }
}
