//! Greatest common divisors of multivariate integer polynomials.
//!
//! The heuristic evaluation/interpolation algorithm (GCDHEU) handles the
//! common case; a recursive primitive PRS is the fallback whenever the
//! heuristic gives up or its integers grow past a fixed limb budget.
//! Every result is normalized to a positive leading coefficient.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::poly::{Exps, Poly};

/// Evaluation points beyond this many bits hand over to the PRS fallback.
const HEU_MAX_BITS: u64 = 1 << 22;
const HEU_ROUNDS: usize = 6;

pub fn gcd(f: &Poly, g: &Poly) -> Poly {
    normalize_sign(gcd_inner(f, g))
}

fn normalize_sign(p: Poly) -> Poly {
    if !p.is_zero() && p.lc().is_negative() {
        p.neg()
    } else {
        p
    }
}

fn gcd_inner(f: &Poly, g: &Poly) -> Poly {
    let n = f.nvars();
    if f.is_zero() {
        return g.clone();
    }
    if g.is_zero() {
        return f.clone();
    }
    if f == g {
        return f.clone();
    }
    if f.is_constant() || g.is_constant() {
        return Poly::constant(f.content().gcd(&g.content()), n);
    }
    if f.is_monomial() || g.is_monomial() {
        return monomial_gcd(f, g);
    }
    // A variable present in only one argument cannot occur in the gcd:
    // reduce against the coefficients of that variable instead.
    let (fu, gu) = (f.used_vars(), g.used_vars());
    if let Some(v) = (0..n).find(|&v| fu[v] != gu[v]) {
        let (with, without) = if fu[v] { (f, g) } else { (g, f) };
        let mut acc = without.clone();
        for (_, c) in with.coeffs_in(v) {
            acc = normalize_sign(gcd_inner(&acc, &c));
            if acc.is_one() {
                break;
            }
        }
        return acc;
    }
    if let Some(h) = heu_gcd(f, g) {
        return h;
    }
    prs_gcd(f, g)
}

fn monomial_gcd(f: &Poly, g: &Poly) -> Poly {
    let c = f.content().gcd(&g.content());
    let (a, b) = (f.min_exps(), g.min_exps());
    let e: Exps = a.iter().zip(b.iter()).map(|(x, y)| *x.min(y)).collect();
    Poly::monomial(e, c)
}

/// Heuristic gcd; returns `None` when it cannot certify a result.
fn heu_gcd(f: &Poly, g: &Poly) -> Option<Poly> {
    heu_gcd_cofactors(f, g).map(|(h, _, _)| normalize_sign(h))
}

fn heu_gcd_cofactors(f: &Poly, g: &Poly) -> Option<(Poly, Poly, Poly)> {
    let n = f.nvars();
    if f.is_zero() || g.is_zero() {
        return None;
    }
    let content = f.content().gcd(&g.content());
    let (a, b) = (f.div_scalar(&content), g.div_scalar(&content));
    let (au, bu) = (a.used_vars(), b.used_vars());
    let var = match (0..n).find(|&v| au[v] && bu[v]) {
        Some(v) => v,
        None => {
            let c = Poly::constant(content, n);
            return Some((c, a, b));
        }
    };
    let (na, nb) = (a.max_norm(), b.max_norm());
    let min_norm = if na < nb { na } else { nb };
    let bound = &min_norm * 2u32 + 29u32;
    let lc_ratio = {
        let ra = a.max_norm() / a.lc().abs();
        let rb = b.max_norm() / b.lc().abs();
        if ra < rb {
            ra
        } else {
            rb
        }
    };
    let sq = bound.sqrt() * 99u32;
    let first = if bound < sq { bound.clone() } else { sq };
    let mut xi = std::cmp::max(first, lc_ratio * 2u32 + 4u32);
    let deg = a.degree(var).max(b.degree(var)) as u64;

    for _ in 0..HEU_ROUNDS {
        if xi.bits() * deg.max(1) > HEU_MAX_BITS {
            return None;
        }
        let aa = a.eval_var(var, &xi);
        let bb = b.eval_var(var, &xi);
        if !aa.is_zero() && !bb.is_zero() {
            if let Some((gamma, cfa, cfb)) = heu_gcd_cofactors(&aa, &bb) {
                let h = interpolate(&gamma, var, &xi);
                let hc = h.content();
                let h = h.div_scalar(&hc);
                if let Some(qa) = a.exact_div(&h) {
                    if let Some(qb) = b.exact_div(&h) {
                        return Some((h.mul_scalar(&content), qa, qb));
                    }
                }
                let ca = interpolate(&cfa, var, &xi);
                if !ca.is_zero() {
                    if let Some(h) = a.exact_div(&ca) {
                        if let Some(qb) = b.exact_div(&h) {
                            return Some((h.mul_scalar(&content), ca, qb));
                        }
                    }
                }
                let cb = interpolate(&cfb, var, &xi);
                if !cb.is_zero() {
                    if let Some(h) = b.exact_div(&cb) {
                        if let Some(qa) = a.exact_div(&h) {
                            return Some((h.mul_scalar(&content), qa, cb));
                        }
                    }
                }
            }
        }
        let r = xi.sqrt().sqrt();
        xi = xi * 73794u32 * r / 27011u32;
    }
    None
}

/// Rebuilds a polynomial in `var` from its value at `xi`, reading the
/// balanced xi-adic digits of every coefficient.
fn interpolate(gamma: &Poly, var: usize, xi: &BigInt) -> Poly {
    let n = gamma.nvars();
    let half = xi / 2u32;
    let mut rest = gamma.clone();
    let mut out = Poly::zero(n);
    let mut i: u16 = 0;
    while !rest.is_zero() {
        let digits: Vec<(Exps, BigInt)> = rest
            .terms()
            .iter()
            .filter_map(|(e, c)| {
                let mut d = c.mod_floor(xi);
                if d > half {
                    d -= xi;
                }
                (!d.is_zero()).then(|| (e.clone(), d))
            })
            .collect();
        let digit = Poly::from_sorted(n, digits);
        let shifted = Poly::from_sorted(
            n,
            digit
                .terms()
                .iter()
                .map(|(e, c)| {
                    let mut e2 = e.clone();
                    e2[var] = i;
                    (e2, c.clone())
                })
                .collect(),
        );
        out = out.add(&shifted);
        rest = rest.sub(&digit).div_scalar(xi);
        i += 1;
    }
    normalize_sign(out)
}

fn main_var(f: &Poly, g: &Poly) -> Option<usize> {
    let (fu, gu) = (f.used_vars(), g.used_vars());
    (0..f.nvars()).find(|&v| fu[v] || gu[v])
}

/// Content of `f` viewed as a polynomial in `v`.
fn content_in(f: &Poly, v: usize) -> Poly {
    let mut acc = Poly::zero(f.nvars());
    for (_, c) in f.coeffs_in(v) {
        acc = normalize_sign(gcd_inner(&acc, &c));
        if acc.is_one() {
            break;
        }
    }
    acc
}

fn primitive_in(f: &Poly, v: usize) -> Poly {
    let c = content_in(f, v);
    f.exact_div(&c).expect("content divides its polynomial")
}

/// Pseudo-remainder of `a` by `b` with respect to `v`.
fn prem(a: &Poly, b: &Poly, v: usize) -> Poly {
    let n = a.nvars();
    let db = b.degree(v);
    let lcb = b.coeff_of(v, db);
    let mut r = a.clone();
    let mut delta = a.degree(v) as i64 - db as i64 + 1;
    while !r.is_zero() && r.degree(v) >= db && r.uses_var(v) {
        let dr = r.degree(v);
        let lcr = r.coeff_of(v, dr);
        let mut e: Exps = smallvec::SmallVec::from_elem(0, n);
        e[v] = (dr - db) as u16;
        let t = lcr.mul_term(&e, &BigInt::one());
        r = r.mul(&lcb).sub(&t.mul(b));
        delta -= 1;
    }
    if delta > 0 {
        r = r.mul(&lcb.pow(delta as u32));
    }
    r
}

fn prs_gcd(f: &Poly, g: &Poly) -> Poly {
    let v = match main_var(f, g) {
        Some(v) => v,
        None => return Poly::constant(f.content().gcd(&g.content()), f.nvars()),
    };
    if !f.uses_var(v) || !g.uses_var(v) {
        return gcd_inner(f, g);
    }
    let (cf, cg) = (content_in(f, v), content_in(g, v));
    let c = normalize_sign(gcd_inner(&cf, &cg));
    let mut a = f.exact_div(&cf).expect("content divides");
    let mut b = g.exact_div(&cg).expect("content divides");
    if a.degree(v) < b.degree(v) {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        let r = prem(&a, &b, v);
        if r.is_zero() {
            break;
        }
        if !r.uses_var(v) {
            b = Poly::one(f.nvars());
            break;
        }
        a = b;
        b = primitive_in(&r, v);
    }
    normalize_sign(primitive_in(&b, v).mul(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::SmallVec;

    fn p(nvars: usize, terms: &[(&[u16], i64)]) -> Poly {
        Poly::from_terms(nvars, terms.iter().map(|(e, c)| (SmallVec::from_slice(e), BigInt::from(*c))).collect())
    }

    #[test]
    fn common_factor_is_recovered() {
        // h = x*y + 2, f = h*(x - y), g = h*(x^2 + 3)
        let h = p(2, &[(&[1, 1], 1), (&[0, 0], 2)]);
        let f = h.mul(&p(2, &[(&[1, 0], 1), (&[0, 1], -1)]));
        let g = h.mul(&p(2, &[(&[2, 0], 1), (&[0, 0], 3)]));
        assert_eq!(gcd(&f, &g), h);
        assert_eq!(prs_gcd(&f, &g), h);
    }

    #[test]
    fn coprime_and_content() {
        let f = p(2, &[(&[1, 0], 6), (&[0, 1], 4)]);
        let g = p(2, &[(&[1, 0], 9), (&[0, 0], 3)]);
        assert_eq!(gcd(&f, &g), p(2, &[(&[0, 0], 1)]));
        let g2 = p(2, &[(&[1, 0], 9), (&[0, 1], 6)]);
        assert_eq!(gcd(&f, &g2), p(2, &[(&[1, 0], 3), (&[0, 1], 2)]));
    }

    #[test]
    fn sign_is_normalized() {
        let f = p(1, &[(&[1], -1), (&[0], 1)]);
        let g = f.mul(&p(1, &[(&[1], 1), (&[0], 5)]));
        assert_eq!(gcd(&f.neg(), &g), f.neg());
    }

    #[test]
    fn constant_gcd_keeps_shrinking() {
        // f = 15*z + 25*x, g = 1500*x: the coefficient of z alone gives 15.
        let f = p(2, &[(&[0, 1], 15), (&[1, 0], 25)]);
        let g = p(2, &[(&[1, 0], 1500)]);
        assert_eq!(gcd(&f, &g), p(2, &[(&[0, 0], 5)]));
        let g2 = p(2, &[(&[1, 0], 1500), (&[0, 0], 3000)]);
        assert_eq!(gcd(&f, &g2), p(2, &[(&[0, 0], 5)]));
    }
}
