//! Deciding identical vanishing.

use std::fmt;

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::numeric::Evaluator;
use super::{Expr, Point, RatFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Zero,
    NonZero,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Zero => "zero",
            Verdict::NonZero => "nonzero",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroVerdict {
    pub verdict: Verdict,
    pub note: String,
}

impl ZeroVerdict {
    fn new(verdict: Verdict, note: impl Into<String>) -> ZeroVerdict {
        ZeroVerdict { verdict, note: note.into() }
    }

    pub fn is_zero(&self) -> bool {
        self.verdict == Verdict::Zero
    }

    pub fn is_nonzero(&self) -> bool {
        self.verdict == Verdict::NonZero
    }

    pub fn is_unknown(&self) -> bool {
        self.verdict == Verdict::Unknown
    }
}

#[derive(Clone, Debug)]
pub struct ZeroTestConfig {
    pub samples: usize,
    pub digits: u32,
    /// Threshold exponent: zero means below `10^tol_exp` times the largest
    /// intermediate magnitude.
    pub tol_exp: i32,
    pub seed: u64,
}

impl Default for ZeroTestConfig {
    fn default() -> Self {
        ZeroTestConfig { samples: 12, digits: 60, tol_exp: -30, seed: 0x5eed_2024 }
    }
}

pub fn is_identically_zero(e: &Expr) -> ZeroVerdict {
    match e.to_ratfn() {
        Ok(r) => test_ratfn(&r, &ZeroTestConfig::default()),
        Err(err) => ZeroVerdict::new(Verdict::Unknown, format!("expression is not defined: {err}")),
    }
}

pub fn test_ratfn(r: &RatFn, cfg: &ZeroTestConfig) -> ZeroVerdict {
    if r.is_zero() {
        return ZeroVerdict::new(Verdict::Zero, "canonical form");
    }
    if !r.has_atoms() {
        return ZeroVerdict::new(Verdict::NonZero, "canonical form");
    }
    // Atom-laden numerators can still vanish through relations the canonical
    // form does not know about; probe the numerator at random points.
    let num = RatFn::from_parts(r.vars(), r.numer().clone());
    numeric_probe(&num.to_expr(), cfg)
}

/// Samples every free symbol in `[1, 2]` with denominators up to `10^4`.
pub fn random_point(e: &Expr, rng: &mut ChaCha8Rng) -> Point {
    let mut pt = Point::new();
    for s in e.free_symbols() {
        pt.set(s, random_unit_offset(rng));
    }
    pt
}

pub(crate) fn random_unit_offset(rng: &mut ChaCha8Rng) -> BigRational {
    let k: i64 = rng.gen_range(0..=10_000);
    BigRational::new(BigInt::from(10_000 + k), BigInt::from(10_000))
}

fn numeric_probe(e: &Expr, cfg: &ZeroTestConfig) -> ZeroVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ev = Evaluator::new(cfg.digits);
    let mut tested = 0;
    let mut attempts = 0;
    while tested < cfg.samples && attempts < cfg.samples * 10 {
        attempts += 1;
        let pt = random_point(e, &mut rng);
        let (v, mag) = match ev.eval(e, &pt) {
            Ok(r) => r,
            Err(_) => continue,
        };
        tested += 1;
        if exceeds(&v, &mag, cfg.tol_exp) {
            return ZeroVerdict::new(
                Verdict::NonZero,
                format!("numeric sample {tested} of {} exceeds tolerance", cfg.samples),
            );
        }
    }
    if tested == 0 {
        return ZeroVerdict::new(Verdict::Unknown, "no admissible sample point");
    }
    ZeroVerdict::new(
        Verdict::Unknown,
        format!("vanishes numerically at {tested} samples, not proven by the canonical form"),
    )
}

/// `|v| > 10^tol_exp * max(mag, 1)`, compared through binary exponents.
pub(crate) fn exceeds(v: &BigFloat, mag: &BigFloat, tol_exp: i32) -> bool {
    if v.is_zero() {
        return false;
    }
    let ve = v.exponent().unwrap_or(0) as f64;
    let me = if mag.is_zero() { 0.0 } else { (mag.exponent().unwrap_or(0) as f64).max(0.0) };
    ve - 1.0 > me + tol_exp as f64 * std::f64::consts::LOG2_10
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_decisions() {
        let x = Expr::x();
        assert!(is_identically_zero(&(Expr::exp(x.clone()) - Expr::exp(x.clone()))).is_zero());
        assert!(is_identically_zero(&Expr::int(12)).is_nonzero());
        let y = Expr::y();
        let e = (&x + &y).powi(3) - x.powi(3);
        assert!(is_identically_zero(&e).is_nonzero());
    }

    #[test]
    fn hidden_relation_is_not_misreported() {
        // exp(2x) and exp(x)^2 are independent atoms to the canonical form.
        let x = Expr::x();
        let e = Expr::exp(2 * x.clone()) - Expr::exp(x).powi(2);
        let v = is_identically_zero(&e);
        assert_eq!(v.verdict, Verdict::Unknown, "{}", v.note);
        let f = Expr::exp(2 * Expr::x()) - Expr::exp(Expr::x());
        assert_eq!(is_identically_zero(&f).verdict, Verdict::NonZero);
    }
}
