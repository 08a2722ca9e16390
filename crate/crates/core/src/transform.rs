//! Point maps: emitting them from invariants, pulling equations back
//! through them, and checking them numerically.

use std::fmt;

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classify::{InvariantReport, Outcome, Target};
use crate::expr::numeric::{to_f64, Evaluator};
use crate::expr::zero::{random_unit_offset, test_ratfn};
use crate::expr::{Expr, ExprError, Point, RatFn, Symbol, SymbolName, Var, ZeroTestConfig};
use crate::parse::{ExtractError, OdeCubic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("the map is not invertible: its Jacobian vanishes identically")]
    DegenerateMap,
    #[error("no admissible sample point found in {0} attempts")]
    AllSamplesSingular(usize),
    #[error("no sign branch verified: {0}")]
    BranchVerificationFailed(String),
    #[error("{0}")]
    NotApplicable(String),
    #[error(transparent)]
    Undefined(#[from] ExprError),
    #[error(transparent)]
    NotCubic(#[from] ExtractError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapFormula {
    Given,
    PainleveI,
    PainleveIICorrected,
    PainleveIIAsPrinted,
}

impl fmt::Display for MapFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapFormula::Given => "given",
            MapFormula::PainleveI => "PI",
            MapFormula::PainleveIICorrected => "PII (cube-root first term)",
            MapFormula::PainleveIIAsPrinted => "PII (sixth-root first term, as printed)",
        })
    }
}

/// Sign choices: `y_sign` multiplies the new `y`, `j_sign` the parameter
/// used inside the new `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MapBranch {
    pub y_sign: i8,
    pub j_sign: i8,
}

impl MapBranch {
    pub const PLUS: MapBranch = MapBranch { y_sign: 1, j_sign: 1 };
}

impl fmt::Display for MapBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: i8| if v < 0 { '-' } else { '+' };
        write!(f, "y:{} J:{}", s(self.y_sign), s(self.j_sign))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub passed: bool,
    pub max_residual: f64,
    pub samples: usize,
    pub sample_box: String,
}

/// `(x, y) -> (x_new(x, y), y_new(x, y))`.
#[derive(Clone, Debug)]
pub struct PointMap {
    pub x_new: RatFn,
    pub y_new: RatFn,
    pub formula: MapFormula,
    pub branch: MapBranch,
    /// The equation in the new variables the map is meant to reach.
    pub target: Option<OdeCubic>,
    pub verification: Option<Verification>,
}

impl PointMap {
    pub fn new(x_new: RatFn, y_new: RatFn) -> Result<PointMap, TransformError> {
        let m = PointMap {
            x_new,
            y_new,
            formula: MapFormula::Given,
            branch: MapBranch::PLUS,
            target: None,
            verification: None,
        };
        if test_ratfn(&m.jacobian(), &ZeroTestConfig::default()).is_zero() {
            return Err(TransformError::DegenerateMap);
        }
        Ok(m)
    }

    pub fn from_exprs(x_new: &Expr, y_new: &Expr) -> Result<PointMap, TransformError> {
        PointMap::new(x_new.to_ratfn()?, y_new.to_ratfn()?)
    }

    pub fn identity() -> PointMap {
        PointMap::new(RatFn::var(Var::X), RatFn::var(Var::Y)).expect("identity is invertible")
    }

    pub fn jacobian(&self) -> RatFn {
        self.x_new.diff(Var::X) * self.y_new.diff(Var::Y) - self.x_new.diff(Var::Y) * self.y_new.diff(Var::X)
    }

    /// `self` followed by `outer`.
    pub fn then(&self, outer: &PointMap) -> Result<PointMap, TransformError> {
        let f = |s: &Symbol| match s {
            Symbol::X => Some(self.x_new.clone()),
            Symbol::Y => Some(self.y_new.clone()),
            _ => None,
        };
        PointMap::new(outer.x_new.substitute(&f)?, outer.y_new.substitute(&f)?)
    }

    pub fn is_verified(&self) -> bool {
        self.verification.as_ref().is_some_and(|v| v.passed)
    }
}

/// Composes the coefficients of `target` with the map.
fn compose(target: &OdeCubic, map: &PointMap) -> Result<[RatFn; 4], TransformError> {
    let f = |s: &Symbol| match s {
        Symbol::X => Some(map.x_new.clone()),
        Symbol::Y => Some(map.y_new.clone()),
        _ => None,
    };
    let [p, q, r, s] = target.coefficients();
    Ok([p.substitute(&f)?, q.substitute(&f)?, r.substitute(&f)?, s.substitute(&f)?])
}

/// The equation in `(x, y)` whose solutions the map sends to solutions of
/// `target`.
pub fn pullback_ode(target: &OdeCubic, map: &PointMap) -> Result<OdeCubic, TransformError> {
    let jac = map.jacobian();
    if jac.is_zero() {
        return Err(TransformError::DegenerateMap);
    }
    let [pt, qt, rt, st] = compose(target, map)?;
    let p = RatFn::var(Var::P);
    let (xx, xy) = (map.x_new.diff(Var::X), map.x_new.diff(Var::Y));
    let (yx, yy) = (map.y_new.diff(Var::X), map.y_new.diff(Var::Y));
    let d1 = &xx + &xy * &p;
    let d2 = &yx + &yy * &p;
    let second = |d: &RatFn, dx: &RatFn, dy: &RatFn| -> RatFn {
        d.diff(Var::X) + 2 * dx.diff(Var::Y) * &p + dy.diff(Var::Y) * &p * &p
    };
    let xsec = second(&xx, &xx, &xy);
    let ysec = second(&yx, &yx, &yy);
    let (d1s, d2s) = (&d1 * &d1, &d2 * &d2);
    let rhs = pt * &d1s * &d1 + 3 * qt * &d1s * &d2 + 3 * rt * &d1 * &d2s + st * &d2s * &d2 - &d1 * ysec + &d2 * xsec;
    let out = OdeCubic::from_rhs(&rhs.div(&jac)?)?;
    debug_assert!(out.coefficients().iter().all(|c| !c.contains_symbol(&Symbol::P)));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub digits: u32,
    /// Largest admissible residual relative to the largest term.
    pub tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 20, seed: 0x5eed_2024, digits: 40, tolerance: 1e-9 }
    }
}

const SAMPLE_BOX: &str = "x, y in [1, 2]; y' in [-1, 1]; parameters in [1, 2]";

/// Pushes `(y', y'')` of `source` forward through `map` and measures how
/// far it is from satisfying `target`.
pub fn verify_map(
    source: &OdeCubic,
    target: &OdeCubic,
    map: &PointMap,
    opts: &VerifyOptions,
) -> Result<Verification, TransformError> {
    let [pt, qt, rt, st] = compose(target, map)?.map(|c| c.to_expr());
    let d = |r: &RatFn, v: Var| r.diff(v);
    let (xx, xy) = (d(&map.x_new, Var::X), d(&map.x_new, Var::Y));
    let (yx, yy) = (d(&map.y_new, Var::X), d(&map.y_new, Var::Y));
    let exprs: Vec<Expr> = [
        &xx,
        &xy,
        &yx,
        &yy,
        &d(&xx, Var::X),
        &d(&xx, Var::Y),
        &d(&xy, Var::Y),
        &d(&yx, Var::X),
        &d(&yx, Var::Y),
        &d(&yy, Var::Y),
    ]
    .into_iter()
    .map(RatFn::to_expr)
    .chain([source.rhs(), pt, qt, rt, st, map.x_new.to_expr(), map.y_new.to_expr()])
    .collect();
    let mut names = std::collections::BTreeSet::new();
    for e in &exprs {
        names.extend(e.free_symbols());
    }
    names.insert(SymbolName::Var(Var::X));
    names.insert(SymbolName::Var(Var::Y));
    names.remove(&SymbolName::Var(Var::P));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ev = Evaluator::new(opts.digits.max(30));
    let budget = opts.samples.max(1) * 20;
    let mut used = 0;
    let mut worst = 0.0f64;
    for _ in 0..budget {
        if used == opts.samples.max(1) {
            break;
        }
        let mut point = Point::new();
        for n in &names {
            point.set(n.clone(), random_unit_offset(&mut rng));
        }
        let k: i64 = rng.gen_range(0..=20_000);
        point.set(SymbolName::Var(Var::P), BigRational::new(BigInt::from(k - 10_000), BigInt::from(10_000)));
        let Some(rel) = residual_at(&mut ev, &exprs, &point) else { continue };
        used += 1;
        worst = worst.max(rel);
    }
    if used == 0 {
        return Err(TransformError::AllSamplesSingular(budget));
    }
    Ok(Verification {
        passed: worst < opts.tolerance,
        max_residual: worst,
        samples: used,
        sample_box: SAMPLE_BOX.to_string(),
    })
}

fn residual_at(ev: &mut Evaluator, exprs: &[Expr], point: &Point) -> Option<f64> {
    let mut v: Vec<BigFloat> = Vec::with_capacity(exprs.len());
    for e in exprs {
        v.push(ev.eval(e, point).ok()?.0);
    }
    let p = ev.rational(point.var(Var::P).expect("p sampled"));
    let [xx, xy, yx, yy, xxx, xxy, xyy, yxx, yxy, yyy, q, pt, qt, rt, st, ..] = &v[..] else { unreachable!() };
    let two = BigFloat::from_i64(2, ev.bits());
    let three = BigFloat::from_i64(3, ev.bits());
    let lin = |a: &BigFloat, b: &BigFloat| ev.add(a, &ev.mul(b, &p));
    let d1 = lin(xx, xy);
    let d2 = lin(yx, yy);
    if d1.is_zero() {
        return None;
    }
    let quad = |a: &BigFloat, b: &BigFloat, c: &BigFloat, first: &BigFloat| {
        let t = ev.add(a, &ev.mul(&ev.mul(&two, b), &p));
        let t = ev.add(&t, &ev.mul(&ev.mul(c, &p), &p));
        ev.add(&t, &ev.mul(first, q))
    };
    let ysec = quad(yxx, yxy, yyy, yy);
    let xsec = quad(xxx, xxy, xyy, xy);
    let num = ev.sub(&ev.mul(&d1, &ysec), &ev.mul(&d2, &xsec));
    let d1c = ev.mul(&ev.mul(&d1, &d1), &d1);
    let ypp = ev.div(&num, &d1c);
    let yp = ev.div(&d2, &d1);
    let yp2 = ev.mul(&yp, &yp);
    let terms = [
        pt.clone(),
        ev.mul(&ev.mul(&three, qt), &yp),
        ev.mul(&ev.mul(&three, rt), &yp2),
        ev.mul(&ev.mul(st, &yp2), &yp),
    ];
    let mut res = ypp.clone();
    let mut scale = to_f64(&ypp).abs();
    for t in &terms {
        res = ev.sub(&res, t);
        scale = scale.max(to_f64(t).abs());
    }
    let r = to_f64(&res).abs();
    if !r.is_finite() || !scale.is_finite() {
        return None;
    }
    Some(if scale > 0.0 { r / scale } else { r })
}

/// All candidate branches plus the first one that verified.
#[derive(Clone, Debug)]
pub struct MapResult {
    pub chosen: PointMap,
    pub candidates: Vec<PointMap>,
}

pub fn painleve1_ode() -> OdeCubic {
    let x = RatFn::var(Var::X);
    let y = RatFn::var(Var::Y);
    OdeCubic { p: 6 * &y * &y + x, q: RatFn::zero(), r: RatFn::zero(), s: RatFn::zero() }
}

pub fn painleve2_ode(a: &RatFn) -> OdeCubic {
    let x = RatFn::var(Var::X);
    let y = RatFn::var(Var::Y);
    OdeCubic { p: 2 * &y * &y * &y + &x * &y + a, q: RatFn::zero(), r: RatFn::zero(), s: RatFn::zero() }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn invariant<'a>(report: &'a InvariantReport, t: Target, name: &str) -> Result<&'a RatFn, TransformError> {
    let c = report.check(t).ok_or_else(|| TransformError::NotApplicable(format!("{t} test was not run")))?;
    if c.outcome != Outcome::Pass {
        return Err(TransformError::NotApplicable(format!("the equation did not pass the {t} test")));
    }
    c.invariant(name).ok_or_else(|| TransformError::NotApplicable(format!("{name} is unavailable")))
}

fn arbitrate(source: &OdeCubic, candidates: Vec<PointMap>, opts: &VerifyOptions) -> Result<MapResult, TransformError> {
    let mut out = Vec::with_capacity(candidates.len());
    let mut notes = Vec::new();
    for mut m in candidates {
        let target = m.target.clone().expect("candidate maps carry a target");
        match verify_map(source, &target, &m, opts) {
            Ok(v) => {
                notes.push(format!("{}: residual {:.3e}", m.branch, v.max_residual));
                m.verification = Some(v);
            }
            Err(e) => notes.push(format!("{}: {e}", m.branch)),
        }
        out.push(m);
    }
    match out.iter().find(|m| m.is_verified()) {
        Some(m) => Ok(MapResult { chosen: m.clone(), candidates: out }),
        None => Err(TransformError::BranchVerificationFailed(notes.join("; "))),
    }
}

fn candidate(
    x_new: RatFn,
    y_new: RatFn,
    formula: MapFormula,
    branch: MapBranch,
    target: OdeCubic,
) -> Result<PointMap, TransformError> {
    let mut m = PointMap::new(x_new.reduce_roots(), y_new.reduce_roots())?;
    m.formula = formula;
    m.branch = branch;
    m.target = Some(target);
    Ok(m)
}

/// `x~ = (12 I1)^(-1/5)`, `y~ = ±(I2^5 / (12^6 I1))^(1/10)`.
pub fn map_painleve1(report: &InvariantReport, opts: &VerifyOptions) -> Result<MapResult, TransformError> {
    let i1 = invariant(report, Target::PainleveI, "I1")?;
    let i2 = invariant(report, Target::PainleveI, "I2")?;
    let x_new = (12 * i1).rat_pow(&q(-1, 5))?;
    let base = i2.powi(5)?.div(&(i1 * &RatFn::from_int(12i64.pow(6))))?;
    let y_abs = base.rat_pow(&q(1, 10))?;
    let mut cands = Vec::new();
    for s in [1i8, -1] {
        let y_new = if s > 0 { y_abs.clone() } else { -&y_abs };
        let branch = MapBranch { y_sign: s, j_sign: 1 };
        cands.push(candidate(x_new.clone(), y_new, MapFormula::PainleveI, branch, painleve1_ode())?);
    }
    arbitrate(&report.ode, cands, opts)
}

/// With `r = (2500 I9)^(-1/6)`: `y~ = ±r` and
/// `x~ = 5 I6 r^2 - (3/2) J / r` (or `5 I6 r - ...` when `as_printed`).
///
/// Negating `y~` negates the parameter, so each branch targets PII with
/// parameter `y_sign * j_sign * J`.
pub fn map_painleve2(
    report: &InvariantReport,
    as_printed: bool,
    opts: &VerifyOptions,
) -> Result<MapResult, TransformError> {
    let i6 = invariant(report, Target::PainleveII, "I6")?;
    let i9 = invariant(report, Target::PainleveII, "I9")?;
    let j = invariant(report, Target::PainleveII, "J")?;
    let cands = painleve2_candidates(i6, i9, j, as_printed)?;
    arbitrate(&report.ode, cands, opts)
}

/// The four sign branches of the PII map, unverified.
pub fn painleve2_candidates(
    i6: &RatFn,
    i9: &RatFn,
    j: &RatFn,
    as_printed: bool,
) -> Result<Vec<PointMap>, TransformError> {
    let r = (2500 * i9).rat_pow(&q(-1, 6))?;
    let first = if as_printed { 5 * i6 * &r } else { 5 * i6 * &r * &r };
    let formula = if as_printed { MapFormula::PainleveIIAsPrinted } else { MapFormula::PainleveIICorrected };
    let mut cands = Vec::new();
    for (ys, js) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
        let jj = if js > 0 { j.clone() } else { -j };
        let x_new = &first - RatFn::ratio(3, 2) * &jj / &r;
        let y_new = if ys > 0 { r.clone() } else { -&r };
        let a = if ys > 0 { jj.clone() } else { -&jj };
        match candidate(x_new, y_new, formula, MapBranch { y_sign: ys, j_sign: js }, painleve2_ode(&a)) {
            Ok(m) => cands.push(m),
            Err(TransformError::DegenerateMap) => continue,
            Err(e) => return Err(e),
        }
    }
    if cands.is_empty() {
        return Err(TransformError::DegenerateMap);
    }
    Ok(cands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify;
    use crate::parse::{parse_expression, parse_ode};

    fn rf(s: &str) -> RatFn {
        parse_expression(s).unwrap().to_ratfn().unwrap()
    }

    #[test]
    fn identity_pullback_is_trivial() {
        let pi = painleve1_ode();
        assert_eq!(pullback_ode(&pi, &PointMap::identity()).unwrap(), pi);
    }

    #[test]
    fn constant_map_is_rejected() {
        assert_eq!(PointMap::new(RatFn::one(), rf("y")).unwrap_err(), TransformError::DegenerateMap);
    }

    #[test]
    fn first_equation_maps_to_itself() {
        let rep = classify(&painleve1_ode());
        let m = map_painleve1(&rep, &VerifyOptions::default()).unwrap();
        assert_eq!(m.chosen.x_new, rf("x"));
        assert_eq!(m.chosen.y_new, rf("y"));
        assert_eq!(m.chosen.branch.y_sign, 1);
        assert!(!m.candidates[1].is_verified());
    }

    #[test]
    fn second_equation_maps_to_itself() {
        let rep = classify(&parse_ode("2*y^3 + x*y + a").unwrap());
        let m = map_painleve2(&rep, false, &VerifyOptions::default()).unwrap();
        assert_eq!(m.chosen.x_new, rf("x"));
        assert_eq!(m.chosen.y_new, rf("y"));
        assert!(map_painleve2(&rep, true, &VerifyOptions::default()).is_err());
    }

    #[test]
    fn shear_pullback_keeps_the_class() {
        let a1 = painleve2_ode(&RatFn::one());
        let m = PointMap::new(rf("x + y"), rf("y")).unwrap();
        let src = pullback_ode(&a1, &m).unwrap();
        assert!(verify_map(&src, &a1, &m, &VerifyOptions::default()).unwrap().passed);
        let rep = classify(&src);
        match rep.classification {
            crate::classify::Classification::PainleveII { j } => {
                assert!(j == RatFn::one() || j == RatFn::from_int(-1), "{j}")
            }
            c => panic!("{c}"),
        }
    }
}
