//! Sparse multivariate polynomials with integer coefficients.
//!
//! Variables are positional: a `Poly` only knows how many variables it has,
//! the mapping to named symbols lives one level up in [`super::ratfn`].
//! Terms are kept in strictly descending lexicographic order of their
//! exponent vectors, so `terms[0]` is always the leading term.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

pub type Exps = SmallVec<[u16; 6]>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    nvars: usize,
    terms: Vec<(Exps, BigInt)>,
}

fn zero_exps(n: usize) -> Exps {
    SmallVec::from_elem(0, n)
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(BigInt::one(), nvars)
    }

    pub fn constant(c: BigInt, nvars: usize) -> Self {
        if c.is_zero() {
            return Self::zero(nvars);
        }
        Poly { nvars, terms: vec![(zero_exps(nvars), c)] }
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        let mut e = zero_exps(nvars);
        e[i] = 1;
        Poly { nvars, terms: vec![(e, BigInt::one())] }
    }

    pub fn monomial(exps: Exps, c: BigInt) -> Self {
        let nvars = exps.len();
        if c.is_zero() {
            return Self::zero(nvars);
        }
        Poly { nvars, terms: vec![(exps, c)] }
    }

    /// Builds a polynomial from unordered terms, merging duplicates.
    pub fn from_terms(nvars: usize, terms: Vec<(Exps, BigInt)>) -> Self {
        let mut map: FxHashMap<Exps, BigInt> = FxHashMap::default();
        for (e, c) in terms {
            debug_assert_eq!(e.len(), nvars);
            *map.entry(e).or_insert_with(BigInt::zero) += c;
        }
        Self::from_map(nvars, map)
    }

    fn from_map(nvars: usize, map: FxHashMap<Exps, BigInt>) -> Self {
        let mut terms: Vec<(Exps, BigInt)> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        Poly { nvars, terms }
    }

    /// Assumes `terms` is already strictly descending with nonzero coefficients.
    pub(crate) fn from_sorted(nvars: usize, terms: Vec<(Exps, BigInt)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 > w[1].0));
        Poly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Exps, BigInt)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Exps, BigInt)> {
        self.terms
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].1.is_one() && self.terms[0].0.iter().all(|&e| e == 0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.iter().all(|&e| e == 0))
    }

    pub fn constant_value(&self) -> Option<BigInt> {
        if self.terms.is_empty() {
            Some(BigInt::zero())
        } else if self.is_constant() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn lc(&self) -> &BigInt {
        &self.terms[0].1
    }

    pub fn lm(&self) -> &Exps {
        &self.terms[0].0
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.terms.iter().map(|(e, _)| e[v] as u32).max().unwrap_or(0)
    }

    pub fn uses_var(&self, v: usize) -> bool {
        self.terms.iter().any(|(e, _)| e[v] > 0)
    }

    pub fn used_vars(&self) -> Vec<bool> {
        let mut used = vec![false; self.nvars];
        for (e, _) in &self.terms {
            for (u, &x) in used.iter_mut().zip(e.iter()) {
                *u |= x > 0;
            }
        }
        used
    }

    /// Componentwise minimum of all exponent vectors.
    pub fn min_exps(&self) -> Exps {
        let mut it = self.terms.iter();
        let mut m = match it.next() {
            Some((e, _)) => e.clone(),
            None => return zero_exps(self.nvars),
        };
        for (e, _) in it {
            for (a, &b) in m.iter_mut().zip(e.iter()) {
                *a = (*a).min(b);
            }
        }
        m
    }

    pub fn max_norm(&self) -> BigInt {
        self.terms.iter().map(|(_, c)| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    /// Positive gcd of the coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for (_, c) in &self.terms {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    pub fn neg(&self) -> Poly {
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.merge(other, true)
    }

    fn merge(&self, other: &Poly, negate: bool) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    let c = if negate { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            let c = if negate { -&t.1 } else { t.1.clone() };
            out.push((t.0.clone(), c));
        }
        Poly { nvars: self.nvars, terms: out }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.nvars);
        }
        if other.terms.len() == 1 {
            return self.mul_term(&other.terms[0].0, &other.terms[0].1);
        }
        if self.terms.len() == 1 {
            return other.mul_term(&self.terms[0].0, &self.terms[0].1);
        }
        let mut map: FxHashMap<Exps, BigInt> =
            FxHashMap::with_capacity_and_hasher(self.terms.len() * other.terms.len() / 2 + 1, Default::default());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exps = ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
                let c = ca * cb;
                match map.get_mut(&e) {
                    Some(v) => *v += c,
                    None => {
                        map.insert(e, c);
                    }
                }
            }
        }
        Self::from_map(self.nvars, map)
    }

    /// Multiplication by a single term preserves the lexicographic order.
    pub fn mul_term(&self, exps: &Exps, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, k)| (e.iter().zip(exps.iter()).map(|(x, y)| x + y).collect(), k * c))
                .collect(),
        }
    }

    pub fn mul_scalar(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect() }
    }

    /// Divides every coefficient by `c`; the caller guarantees exactness.
    pub fn div_scalar(&self, c: &BigInt) -> Poly {
        if c.is_one() {
            return self.clone();
        }
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, k)| {
                    debug_assert!((k % c).is_zero());
                    (e.clone(), k / c)
                })
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        if n == 0 {
            return Poly::one(self.nvars);
        }
        if self.terms.len() == 1 {
            let (e, c) = &self.terms[0];
            let e: Exps = e.iter().map(|x| x * n as u16).collect();
            return Poly::monomial(e, num_traits::pow(c.clone(), n as usize));
        }
        let mut result = Poly::one(self.nvars);
        let mut base = self.clone();
        let mut k = n;
        loop {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.mul(&base);
        }
        result
    }

    /// Substitutes the integer `value` for variable `v`.
    pub fn eval_var(&self, v: usize, value: &BigInt) -> Poly {
        let maxd = self.degree(v) as usize;
        let mut powers = Vec::with_capacity(maxd + 1);
        powers.push(BigInt::one());
        for i in 1..=maxd {
            let p = &powers[i - 1] * value;
            powers.push(p);
        }
        let mut map: FxHashMap<Exps, BigInt> = FxHashMap::default();
        for (e, c) in &self.terms {
            let d = e[v] as usize;
            let mut e2 = e.clone();
            e2[v] = 0;
            *map.entry(e2).or_insert_with(BigInt::zero) += c * &powers[d];
        }
        Self::from_map(self.nvars, map)
    }

    /// Formal partial derivative with respect to variable `v`.
    pub fn partial(&self, v: usize) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (e, c) in &self.terms {
            if e[v] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[v] -= 1;
            terms.push((e2, c * BigInt::from(e[v])));
        }
        // Subtracting the same unit vector from every kept term preserves order.
        Poly { nvars: self.nvars, terms }
    }

    /// Re-expresses the polynomial over `new_nvars` variables, old variable
    /// `i` becoming new variable `map[i]`.
    pub fn remap(&self, new_nvars: usize, map: &[usize]) -> Poly {
        debug_assert_eq!(map.len(), self.nvars);
        let monotone = map.windows(2).all(|w| w[0] < w[1]);
        let mut terms: Vec<(Exps, BigInt)> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e2 = zero_exps(new_nvars);
                for (i, &x) in e.iter().enumerate() {
                    e2[map[i]] += x;
                }
                (e2, c.clone())
            })
            .collect();
        if !monotone {
            terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        }
        Poly { nvars: new_nvars, terms }
    }

    /// Flips the sign of every term of odd degree in `v` (i.e. `v -> -v`).
    pub fn negate_var(&self, v: usize) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), if e[v] % 2 == 1 { -c } else { c.clone() })).collect(),
        }
    }

    /// Coefficient of `v^k`, as a polynomial in which `v` no longer occurs.
    pub fn coeff_of(&self, v: usize, k: u32) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[v] as u32 == k)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[v] = 0;
                (e2, c.clone())
            })
            .collect::<Vec<_>>();
        // Removing the same exponent from every kept term preserves order.
        Poly { nvars: self.nvars, terms }
    }

    /// Splits the polynomial by degree in `v`, highest degree first.
    pub fn coeffs_in(&self, v: usize) -> Vec<(u32, Poly)> {
        let mut groups: BTreeMap<u32, Vec<(Exps, BigInt)>> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let d = e2[v] as u32;
            e2[v] = 0;
            groups.entry(d).or_default().push((e2, c.clone()));
        }
        groups.into_iter().rev().map(|(d, ts)| (d, Poly { nvars: self.nvars, terms: ts })).collect()
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.is_zero() {
            return Some(Poly::zero(self.nvars));
        }
        if d.is_constant() {
            let c = &d.terms[0].1;
            if self.terms.iter().all(|(_, k)| (k % c).is_zero()) {
                return Some(self.div_scalar(c));
            }
            return None;
        }
        if d.terms.len() == 1 {
            let (de, dc) = &d.terms[0];
            let mut terms = Vec::with_capacity(self.terms.len());
            for (e, c) in &self.terms {
                if e.iter().zip(de.iter()).any(|(a, b)| a < b) {
                    return None;
                }
                let (q, r) = c.div_rem(dc);
                if !r.is_zero() {
                    return None;
                }
                terms.push((e.iter().zip(de.iter()).map(|(a, b)| a - b).collect(), q));
            }
            return Some(Poly { nvars: self.nvars, terms });
        }
        for v in 0..self.nvars {
            if d.degree(v) > self.degree(v) {
                return None;
            }
        }
        let (dlm, dlc) = (&d.terms[0].0, &d.terms[0].1);
        let mut rem: BTreeMap<Exps, BigInt> = self.terms.iter().cloned().collect();
        let mut quot: Vec<(Exps, BigInt)> = Vec::new();
        while let Some((e, c)) = rem.pop_last() {
            if e.iter().zip(dlm.iter()).any(|(a, b)| a < b) {
                return None;
            }
            let (q, r) = c.div_rem(dlc);
            if !r.is_zero() {
                return None;
            }
            let qe: Exps = e.iter().zip(dlm.iter()).map(|(a, b)| a - b).collect();
            for (te, tc) in d.terms.iter().skip(1) {
                let ne: Exps = te.iter().zip(qe.iter()).map(|(a, b)| a + b).collect();
                let delta = tc * &q;
                match rem.get_mut(&ne) {
                    Some(v) => {
                        *v -= delta;
                        if v.is_zero() {
                            rem.remove(&ne);
                        }
                    }
                    None => {
                        rem.insert(ne, -delta);
                    }
                }
            }
            quot.push((qe, q));
        }
        Some(Poly { nvars: self.nvars, terms: quot })
    }

    /// Exact `n`-th root, if the polynomial is a perfect power.
    ///
    /// For odd `n` a negative leading coefficient is allowed; for even `n`
    /// the root with positive leading coefficient is returned.
    pub fn exact_root(&self, n: u32) -> Option<Poly> {
        assert!(n >= 1);
        if n == 1 || self.is_zero() {
            return Some(self.clone());
        }
        if self.lc().is_negative() {
            if n.is_multiple_of(2) {
                return None;
            }
            return self.neg().exact_root(n).map(|r| r.neg());
        }
        let (lm, lc) = &self.terms[0];
        if lm.iter().any(|&e| !(e as u32).is_multiple_of(n)) {
            return None;
        }
        let c0 = integer_root(lc, n)?;
        let e0: Exps = lm.iter().map(|&e| (e as u32 / n) as u16).collect();
        let g0 = Poly::monomial(e0.clone(), c0.clone());
        // Each new term t satisfies lt(f - g^n) = n * lt(g)^(n-1) * t.
        let scale = g0.pow(n - 1).mul_scalar(&BigInt::from(n));
        let (se, sc) = (scale.terms[0].0.clone(), scale.terms[0].1.clone());
        let max_exp: Vec<u32> = (0..self.nvars).map(|v| self.degree(v) / n).collect();
        let mut g = g0;
        for _ in 0..=self.terms.len() {
            let r = self.sub(&g.pow(n));
            if r.is_zero() {
                return Some(g);
            }
            let (re, rc) = (&r.terms[0].0, &r.terms[0].1);
            if re.iter().zip(se.iter()).any(|(a, b)| a < b) {
                return None;
            }
            let (q, rm) = rc.div_rem(&sc);
            if !rm.is_zero() {
                return None;
            }
            let te: Exps = re.iter().zip(se.iter()).map(|(a, b)| a - b).collect();
            if te.iter().zip(max_exp.iter()).any(|(&a, &b)| a as u32 > b) {
                return None;
            }
            if let Some((last, _)) = g.terms.last() {
                if &te >= last {
                    return None;
                }
            }
            g.terms.push((te, q));
        }
        None
    }
}

/// Exact integer `n`-th root of a non-negative integer.
pub fn integer_root(c: &BigInt, n: u32) -> Option<BigInt> {
    if c.is_negative() {
        return None;
    }
    let r = c.nth_root(n);
    if num_traits::pow(r.clone(), n as usize) == *c {
        Some(r)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(nvars: usize, terms: &[(&[u16], i64)]) -> Poly {
        Poly::from_terms(nvars, terms.iter().map(|(e, c)| (SmallVec::from_slice(e), BigInt::from(*c))).collect())
    }

    #[test]
    fn product_and_exact_division() {
        // (x + y)(x - y) = x^2 - y^2
        let a = p(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let b = p(2, &[(&[1, 0], 1), (&[0, 1], -1)]);
        let prod = a.mul(&b);
        assert_eq!(prod, p(2, &[(&[2, 0], 1), (&[0, 2], -1)]));
        assert_eq!(prod.exact_div(&a), Some(b.clone()));
        assert_eq!(prod.exact_div(&p(2, &[(&[1, 0], 1), (&[0, 0], 3)])), None);
    }

    #[test]
    fn partial_keeps_order() {
        // d/dx (x^2 y + x y^3) = 2 x y + y^3, y^3 < x y in lex order
        let f = p(2, &[(&[2, 1], 1), (&[1, 3], 1)]);
        let d = f.partial(0);
        assert_eq!(d, p(2, &[(&[1, 1], 2), (&[0, 3], 1)]));
        assert!(d.terms()[0].0 > d.terms()[1].0);
    }

    #[test]
    fn roots_of_perfect_powers() {
        let g = p(2, &[(&[1, 0], 2), (&[0, 1], -3), (&[0, 0], 1)]);
        for n in 1..6 {
            let f = g.pow(n);
            let r = f.exact_root(n).unwrap();
            assert_eq!(r.pow(n), f);
        }
        assert_eq!(p(1, &[(&[2], 1), (&[0], 1)]).exact_root(2), None);
        assert_eq!(g.pow(3).neg().exact_root(3).unwrap(), g.neg());
    }

    #[test]
    fn eval_and_coefficients() {
        let f = p(2, &[(&[2, 1], 1), (&[1, 0], 5), (&[0, 2], 1)]);
        let e = f.eval_var(0, &BigInt::from(2));
        assert_eq!(e, p(2, &[(&[0, 2], 1), (&[0, 1], 4), (&[0, 0], 10)]));
        let cs = f.coeffs_in(0);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0].0, 2);
        assert_eq!(f.coeff_of(1, 2), p(2, &[(&[0, 0], 1)]));
    }
}
