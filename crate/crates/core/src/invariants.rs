//! Pseudovector fields and pseudoinvariants of `y'' = P + 3Qy' + 3Ry'^2 + Sy'^3`.
//!
//! Every stage is computed lazily, normalized, and cached. Formulas come in
//! two flavours, usable when `A` (resp. `B`) does not vanish; the branch
//! policy prefers `A` and keeps the other for agreement checks.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::expr::zero::test_ratfn;
use crate::expr::{Expr, RatFn, Var, ZeroTestConfig, ZeroVerdict};
use crate::parse::OdeCubic;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantError {
    #[error("both components of the field alpha vanish identically")]
    BothComponentsZero,
    #[error("cannot decide which component of alpha is nonzero: {0}")]
    BranchUndecided(String),
    #[error("the {0} formulas need a nonzero component of alpha")]
    BranchUnavailable(Branch),
    #[error("Gamma is undefined because M vanishes identically")]
    GammaUndefined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    UseA,
    UseB,
}

impl Branch {
    fn index(self) -> usize {
        match self {
            Branch::UseA => 0,
            Branch::UseB => 1,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::UseA => "A != 0",
            Branch::UseB => "B != 0",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchKind {
    UseA,
    UseB,
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchChoice {
    pub kind: BranchKind,
    pub a: ZeroVerdict,
    pub b: ZeroVerdict,
}

impl BranchChoice {
    pub fn primary(&self) -> Branch {
        match self.kind {
            BranchKind::UseA | BranchKind::Both => Branch::UseA,
            BranchKind::UseB => Branch::UseB,
        }
    }

    pub fn available(&self, br: Branch) -> bool {
        matches!(
            (self.kind, br),
            (BranchKind::Both, _) | (BranchKind::UseA, Branch::UseA) | (BranchKind::UseB, Branch::UseB)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PseudoValue {
    Scalar(RatFn),
    Vector([RatFn; 2]),
}

/// A pseudo-object with its weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pseudo {
    pub name: &'static str,
    pub weight: i32,
    pub value: PseudoValue,
}

impl Pseudo {
    fn scalar(name: &'static str, r: RatFn) -> Pseudo {
        Pseudo { name, weight: weight_of(name), value: PseudoValue::Scalar(r) }
    }

    fn vector(name: &'static str, v: [RatFn; 2]) -> Pseudo {
        Pseudo { name, weight: weight_of(name), value: PseudoValue::Vector(v) }
    }

    pub fn as_scalar(&self) -> Option<&RatFn> {
        match &self.value {
            PseudoValue::Scalar(r) => Some(r),
            PseudoValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[RatFn; 2]> {
        match &self.value {
            PseudoValue::Vector(v) => Some(v),
            PseudoValue::Scalar(_) => None,
        }
    }

    pub fn exprs(&self) -> Vec<Expr> {
        match &self.value {
            PseudoValue::Scalar(r) => vec![r.to_expr()],
            PseudoValue::Vector(v) => v.iter().map(RatFn::to_expr).collect(),
        }
    }
}

pub fn weight_of(name: &str) -> i32 {
    match name {
        "alpha" => 2,
        "F" => 5,
        "N" => 2,
        "M" => 4,
        "Omega" => 1,
        "omega" => -1,
        "Theta" => -2,
        "theta" => -1,
        "L" => -4,
        "L1" => -5,
        "W" => -6,
        "V" => -3,
        "xi" => 3,
        "Gamma" => 4,
        _ => panic!("no weight recorded for `{name}`"),
    }
}

/// A function with its first partial derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jet {
    pub v: RatFn,
    pub x: RatFn,
    pub y: RatFn,
}

impl Jet {
    pub fn of(v: RatFn) -> Jet {
        let x = v.diff(Var::X);
        let y = v.diff(Var::Y);
        Jet { v, x, y }
    }
}

/// A function with first and second partial derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jet2 {
    pub v: RatFn,
    pub x: RatFn,
    pub y: RatFn,
    pub xx: RatFn,
    pub xy: RatFn,
    pub yy: RatFn,
}

impl Jet2 {
    pub fn of(v: RatFn) -> Jet2 {
        let x = v.diff(Var::X);
        let y = v.diff(Var::Y);
        let xx = x.diff(Var::X);
        let xy = x.diff(Var::Y);
        let yy = y.diff(Var::Y);
        Jet2 { v, x, y, xx, xy, yy }
    }
}

#[derive(Clone, Debug)]
pub struct FCondition {
    pub g: RatFn,
    pub h: RatFn,
    /// `F^5 = (AG + BH)/3`.
    pub f5: RatFn,
    pub verdict: ZeroVerdict,
}

#[derive(Default)]
struct Stages {
    n: OnceLock<Jet>,
    phi: OnceLock<[RatFn; 2]>,
    m: OnceLock<RatFn>,
    big_omega: OnceLock<RatFn>,
    omega: OnceLock<[RatFn; 2]>,
    big_theta: OnceLock<Jet>,
    theta: OnceLock<[Jet; 2]>,
    l: OnceLock<Jet>,
    l1: OnceLock<Jet>,
    w: OnceLock<RatFn>,
    v: OnceLock<RatFn>,
    gamma: OnceLock<[Jet; 2]>,
    big_gamma: OnceLock<Result<RatFn, InvariantError>>,
}

/// Agreement of one quantity across the two branch formulas.
#[derive(Clone, Debug)]
pub struct Agreement {
    pub name: &'static str,
    pub verdict: ZeroVerdict,
}

fn k(n: i64, d: i64) -> RatFn {
    RatFn::ratio(n, d)
}

fn sq(r: &RatFn) -> RatFn {
    r * r
}

fn cube(r: &RatFn) -> RatFn {
    r * r * r
}

/// The lazily evaluated invariant pipeline of one equation.
pub struct Pipeline {
    ode: OdeCubic,
    cfg: ZeroTestConfig,
    coeffs: OnceLock<[Jet2; 4]>,
    alpha: OnceLock<[Jet2; 2]>,
    f: OnceLock<FCondition>,
    branch: OnceLock<Result<BranchChoice, InvariantError>>,
    stages: [Stages; 2],
}

impl Pipeline {
    pub fn new(ode: OdeCubic) -> Pipeline {
        Self::with_config(ode, ZeroTestConfig::default())
    }

    pub fn with_config(ode: OdeCubic, cfg: ZeroTestConfig) -> Pipeline {
        Pipeline {
            ode,
            cfg,
            coeffs: OnceLock::new(),
            alpha: OnceLock::new(),
            f: OnceLock::new(),
            branch: OnceLock::new(),
            stages: Default::default(),
        }
    }

    pub fn ode(&self) -> &OdeCubic {
        &self.ode
    }

    pub fn zero_test(&self, r: &RatFn) -> ZeroVerdict {
        test_ratfn(r, &self.cfg)
    }

    pub fn config(&self) -> &ZeroTestConfig {
        &self.cfg
    }

    fn coeffs(&self) -> &[Jet2; 4] {
        self.coeffs.get_or_init(|| {
            let o = &self.ode;
            [Jet2::of(o.p.clone()), Jet2::of(o.q.clone()), Jet2::of(o.r.clone()), Jet2::of(o.s.clone())]
        })
    }

    /// Jets of `A` and `B`.
    pub fn ab(&self) -> &[Jet2; 2] {
        self.alpha.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            let a = &p.yy - 2 * &q.xy + &r.xx + 2 * &p.v * &s.x + &s.v * &p.x
                - 3 * &p.v * &r.y
                - 3 * &r.v * &p.y
                - 3 * &q.v * &r.x
                + 6 * &q.v * &q.y;
            let b = &s.xx - 2 * &r.xy + &q.yy - 2 * &s.v * &p.y - &p.v * &s.y
                + 3 * &s.v * &q.x
                + 3 * &q.v * &s.x
                + 3 * &r.v * &q.y
                - 6 * &r.v * &r.x;
            [Jet2::of(a), Jet2::of(b)]
        })
    }

    /// `alpha = (B, -A)`, weight 2.
    pub fn alpha_field(&self) -> Pseudo {
        let [a, b] = self.ab();
        Pseudo::vector("alpha", [b.v.clone(), -&a.v])
    }

    pub fn f_condition(&self) -> &FCondition {
        self.f.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            let [a, b] = self.ab();
            let g = -(&b.v * &b.x) - 3 * &a.v * &b.y + 4 * &b.v * &a.y + 3 * &s.v * sq(&a.v) - 6 * &r.v * &b.v * &a.v
                + 3 * &q.v * sq(&b.v);
            let h = -(&a.v * &a.y) - 3 * &b.v * &a.x + 4 * &a.v * &b.x - 3 * &p.v * sq(&b.v) + 6 * &q.v * &a.v * &b.v
                - 3 * &r.v * sq(&a.v);
            let sum = &a.v * &g + &b.v * &h;
            let verdict = self.zero_test(&sum);
            FCondition { f5: sum * k(1, 3), g, h, verdict }
        })
    }

    pub fn branch(&self) -> Result<&BranchChoice, InvariantError> {
        self.branch
            .get_or_init(|| {
                let [a, b] = self.ab();
                let (va, vb) = (self.zero_test(&a.v), self.zero_test(&b.v));
                let kind = match (va.is_nonzero(), vb.is_nonzero()) {
                    (true, true) => BranchKind::Both,
                    (true, false) => BranchKind::UseA,
                    (false, true) => BranchKind::UseB,
                    (false, false) if va.is_zero() && vb.is_zero() => {
                        return Err(InvariantError::BothComponentsZero);
                    }
                    _ => {
                        return Err(InvariantError::BranchUndecided(format!(
                            "A: {} ({}), B: {} ({})",
                            va.verdict, va.note, vb.verdict, vb.note
                        )));
                    }
                };
                Ok(BranchChoice { kind, a: va, b: vb })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn primary(&self) -> Result<Branch, InvariantError> {
        Ok(self.branch()?.primary())
    }

    fn stage(&self, br: Branch) -> Result<&Stages, InvariantError> {
        if !self.branch()?.available(br) {
            return Err(InvariantError::BranchUnavailable(br));
        }
        Ok(&self.stages[br.index()])
    }

    pub fn n_on(&self, br: Branch) -> Result<&Jet, InvariantError> {
        let st = self.stage(br)?;
        Ok(st.n.get_or_init(|| {
            let [a, b] = self.ab();
            let f = self.f_condition();
            let n = match br {
                Branch::UseA => -(&f.h) / (3 * &a.v),
                Branch::UseB => &f.g / (3 * &b.v),
            };
            Jet::of(n)
        }))
    }

    pub fn phi_on(&self, br: Branch) -> Result<&[RatFn; 2], InvariantError> {
        let st = self.stage(br)?;
        Ok(st.phi.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            let [a, b] = self.ab();
            match br {
                Branch::UseA => {
                    let bp_ax = &b.v * &p.v + &a.x;
                    let phi1 = k(-3, 5) * &bp_ax / &a.v + k(3, 5) * &q.v;
                    let phi2 = k(3, 5) * &b.v * &bp_ax / sq(&a.v) - k(3, 5) * (&b.x + &a.y + 3 * &b.v * &q.v) / &a.v
                        + k(6, 5) * &r.v;
                    [phi1, phi2]
                }
                Branch::UseB => {
                    let as_by = &a.v * &s.v - &b.y;
                    let phi1 = k(-3, 5) * &a.v * &as_by / sq(&b.v)
                        - k(3, 5) * (&a.y + &b.x - 3 * &a.v * &r.v) / &b.v
                        - k(6, 5) * &q.v;
                    let phi2 = k(3, 5) * &as_by / &b.v - k(3, 5) * &r.v;
                    [phi1, phi2]
                }
            }
        }))
    }

    pub fn m_on(&self, br: Branch) -> Result<&RatFn, InvariantError> {
        let st = self.stage(br)?;
        let n = self.n_on(br)?;
        Ok(st.m.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            let [a, b] = self.ab();
            match br {
                Branch::UseA => {
                    let bp_ax = &b.v * &p.v + &a.x;
                    k(-12, 5) * &b.v * &n.v * &bp_ax / &a.v
                        + &b.v * &n.x
                        + k(24, 5) * &b.v * &n.v * &q.v
                        + k(6, 5) * &n.v * &b.x
                        + k(6, 5) * &n.v * &a.y
                        - &a.v * &n.y
                        - k(12, 5) * &a.v * &n.v * &r.v
                }
                Branch::UseB => {
                    let as_by = &a.v * &s.v - &b.y;
                    k(-12, 5) * &a.v * &n.v * &as_by / &b.v - &a.v * &n.y + k(24, 5) * &a.v * &n.v * &r.v
                        - k(6, 5) * &n.v * &a.y
                        - k(6, 5) * &n.v * &b.x
                        + &b.v * &n.x
                        - k(12, 5) * &b.v * &n.v * &q.v
                }
            }
        }))
    }

    pub fn big_omega_on(&self, br: Branch) -> Result<&RatFn, InvariantError> {
        let st = self.stage(br)?;
        Ok(st.big_omega.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            let [a, b] = self.ab();
            match br {
                Branch::UseA => {
                    let bp_ax = &b.v * &p.v + &a.x;
                    let a2 = sq(&a.v);
                    2 * &b.v * &a.x * &bp_ax / cube(&a.v) - (2 * &b.x + 3 * &b.v * &q.v) * &a.x / &a2
                        + (&a.y - 2 * &b.x) * &b.v * &p.v / &a2
                        - (&b.v * &a.xx + sq(&b.v) * &p.x) / &a2
                        + &b.xx / &a.v
                        + (3 * &b.x * &q.v + 3 * &b.v * &q.x - &b.y * &p.v - &b.v * &p.y) / &a.v
                        + &q.y
                        - 2 * &r.x
                }
                Branch::UseB => {
                    let as_by = &a.v * &s.v - &b.y;
                    let b2 = sq(&b.v);
                    2 * &a.v * &b.y * &as_by / cube(&b.v)
                        + (2 * &a.y - 3 * &a.v * &r.v) * &b.y / &b2
                        + (&b.x - 2 * &a.y) * &a.v * &s.v / &b2
                        + (&a.v * &b.yy - sq(&a.v) * &s.y) / &b2
                        - &a.yy / &b.v
                        + (3 * &a.y * &r.v + 3 * &a.v * &r.y - &a.x * &s.v - &a.v * &s.x) / &b.v
                        + &r.x
                        - 2 * &q.y
                }
            }
        }))
    }

    /// The covector `omega`; `Theta` is covariant only where `N = 0`.
    pub fn omega_on(&self, br: Branch) -> Result<&[RatFn; 2], InvariantError> {
        let st = self.stage(br)?;
        Ok(st.omega.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            let [a, b] = self.ab();
            match br {
                Branch::UseA => {
                    let (a1, a2, a3, a4) = (&a.v, sq(&a.v), cube(&a.v), sq(&sq(&a.v)));
                    let w1 = 12 * &p.v * &r.v / (5 * a1) - k(54, 25) * sq(&q.v) / a1 - &p.y / a1 + 6 * &q.x / (5 * a1)
                        - (&p.v * &a.y + &b.v * &p.x + &a.xx) / (5 * &a2)
                        - 2 * &b.x * &p.v / (5 * &a2)
                        + (3 * &q.v * &a.x - 12 * &p.v * &b.v * &q.v) / (25 * &a2)
                        + (6 * sq(&b.v) * sq(&p.v) + 12 * &b.v * &p.v * &a.x + 6 * sq(&a.x)) / (25 * &a3);
                    let w2 = (-5 * &b.v * &p.y + 6 * &b.v * &q.x + 12 * &r.v * &b.v * &p.v) / (5 * &a2)
                        - k(54, 25) * &b.v * sq(&q.v) / &a2
                        - (2 * &b.v * &b.x * &p.v + &b.v * &a.y * &p.v + sq(&b.v) * &p.x + &b.v * &a.xx) / (5 * &a3)
                        - 12 * sq(&b.v) * &p.v * &q.v / (25 * &a3)
                        + 3 * &b.v * &q.v * &a.x / (25 * &a3)
                        + (6 * &b.v * sq(&a.x) + 6 * cube(&b.v) * sq(&p.v) + 12 * sq(&b.v) * &a.x * &p.v) / (25 * &a4);
                    [w1, w2]
                }
                Branch::UseB => {
                    let (b1, b2, b3, b4) = (&b.v, sq(&b.v), cube(&b.v), sq(&sq(&b.v)));
                    let w1 = (5 * &a.v * &s.x - 6 * &a.v * &r.y + 12 * &q.v * &a.v * &s.v) / (5 * &b2)
                        - k(54, 25) * &a.v * sq(&r.v) / &b2
                        + (2 * &a.v * &a.y * &s.v + &a.v * &b.x * &s.v + sq(&a.v) * &s.y - &a.v * &b.yy) / (5 * &b3)
                        - 12 * sq(&a.v) * &s.v * &r.v / (25 * &b3)
                        - 3 * &a.v * &r.v * &b.y / (25 * &b3)
                        + (6 * &a.v * sq(&b.y) + 6 * cube(&a.v) * sq(&s.v) - 12 * sq(&a.v) * &b.y * &s.v) / (25 * &b4);
                    let w2 = 12 * &s.v * &q.v / (5 * b1) - k(54, 25) * sq(&r.v) / b1 + &s.x / b1 - 6 * &r.y / (5 * b1)
                        + (&s.v * &b.x + &a.v * &s.y - &b.yy) / (5 * &b2)
                        + 2 * &a.y * &s.v / (5 * &b2)
                        - (3 * &r.v * &b.y + 12 * &s.v * &a.v * &r.v) / (25 * &b2)
                        + (6 * sq(&a.v) * sq(&s.v) - 12 * &b.y * &a.v * &s.v + 6 * sq(&b.y)) / (25 * &b3);
                    [w1, w2]
                }
            }
        }))
    }

    pub fn big_theta_on(&self, br: Branch) -> Result<&Jet, InvariantError> {
        let st = self.stage(br)?;
        let w = self.omega_on(br)?;
        Ok(st.big_theta.get_or_init(|| {
            let [a, b] = self.ab();
            let t = match br {
                Branch::UseA => &w[0] / &a.v,
                Branch::UseB => &w[1] / &b.v,
            };
            Jet::of(t)
        }))
    }

    pub fn theta_on(&self, br: Branch) -> Result<&[Jet; 2], InvariantError> {
        let st = self.stage(br)?;
        let t = self.big_theta_on(br)?;
        let phi = self.phi_on(br)?;
        Ok(st.theta.get_or_init(|| {
            let t1 = &t.y - 2 * &phi[1] * &t.v;
            let t2 = -(&t.x) + 2 * &phi[0] * &t.v;
            [Jet::of(t1), Jet::of(t2)]
        }))
    }

    pub fn l_on(&self, br: Branch) -> Result<&Jet, InvariantError> {
        let st = self.stage(br)?;
        let [t1, t2] = self.theta_on(br)?;
        let big_t = self.big_theta_on(br)?;
        Ok(st.l.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            // Residual of the equation along the integral curves of theta.
            let l = -(&t1.v * &t2.v * (&t1.x - &t2.y)) - sq(&t2.v) * &t1.y + sq(&t1.v) * &t2.x
                - &p.v * cube(&t1.v)
                - 3 * &q.v * sq(&t1.v) * &t2.v
                - 3 * &r.v * &t1.v * sq(&t2.v)
                - &s.v * cube(&t2.v)
                - k(1, 2) * sq(&big_t.v);
            Jet::of(l)
        }))
    }

    fn phi_theta(&self, br: Branch) -> Result<RatFn, InvariantError> {
        let [t1, t2] = self.theta_on(br)?;
        let phi = self.phi_on(br)?;
        Ok(&phi[0] * &t1.v + &phi[1] * &t2.v)
    }

    pub fn l1_on(&self, br: Branch) -> Result<&Jet, InvariantError> {
        let st = self.stage(br)?;
        let [t1, t2] = self.theta_on(br)?;
        let l = self.l_on(br)?;
        if let Some(v) = st.l1.get() {
            return Ok(v);
        }
        let pt = self.phi_theta(br)?;
        Ok(st.l1.get_or_init(|| Jet::of(&l.x * &t1.v + &l.y * &t2.v - 4 * &l.v * pt)))
    }

    pub fn w_on(&self, br: Branch) -> Result<&RatFn, InvariantError> {
        let st = self.stage(br)?;
        let [t1, t2] = self.theta_on(br)?;
        let l1 = self.l1_on(br)?;
        if let Some(v) = st.w.get() {
            return Ok(v);
        }
        let pt = self.phi_theta(br)?;
        Ok(st.w.get_or_init(|| &l1.x * &t1.v + &l1.y * &t2.v - 5 * &l1.v * pt))
    }

    pub fn v_on(&self, br: Branch) -> Result<&RatFn, InvariantError> {
        let st = self.stage(br)?;
        let l1 = self.l1_on(br)?;
        let phi = self.phi_on(br)?;
        Ok(st.v.get_or_init(|| {
            let [a, b] = self.ab();
            &l1.x * &b.v - &l1.y * &a.v - 5 * &l1.v * (&b.v * &phi[0] - &a.v * &phi[1])
        }))
    }

    pub fn gamma_on(&self, br: Branch) -> Result<&[Jet; 2], InvariantError> {
        let st = self.stage(br)?;
        let n = self.n_on(br)?;
        let om = self.big_omega_on(br)?;
        Ok(st.gamma.get_or_init(|| {
            let [p, q, r, s] = self.coeffs();
            let [a, b] = self.ab();
            let (g1, g2) = match br {
                Branch::UseA => {
                    let bp_ax = &b.v * &p.v + &a.x;
                    let g1 = -6 * &b.v * &n.v * &bp_ax / (5 * sq(&a.v))
                        + 18 * &n.v * &b.v * &q.v / (5 * &a.v)
                        + 6 * &n.v * (&b.x + &a.y) / (5 * &a.v)
                        - &n.y
                        - k(12, 5) * &n.v * &r.v
                        - 2 * om * &b.v;
                    let g2 = -6 * &n.v * &bp_ax / (5 * &a.v) + &n.x + k(6, 5) * &n.v * &q.v + 2 * om * &a.v;
                    (g1, g2)
                }
                Branch::UseB => {
                    let as_by = &a.v * &s.v - &b.y;
                    let g1 = -6 * &n.v * &as_by / (5 * &b.v) - &n.y + k(6, 5) * &n.v * &r.v - 2 * om * &b.v;
                    let g2 = -6 * &a.v * &n.v * &as_by / (5 * sq(&b.v)) + 18 * &n.v * &a.v * &r.v / (5 * &b.v)
                        - 6 * &n.v * (&a.y + &b.x) / (5 * &b.v)
                        + &n.x
                        - k(12, 5) * &n.v * &q.v
                        + 2 * om * &a.v;
                    (g1, g2)
                }
            };
            [Jet::of(g1), Jet::of(g2)]
        }))
    }

    pub fn xi_on(&self, br: Branch) -> Result<[RatFn; 2], InvariantError> {
        let [g1, g2] = self.gamma_on(br)?;
        let om = self.big_omega_on(br)?;
        let [a, b] = self.ab();
        Ok([-2 * om * &b.v - &g1.v, 2 * om * &a.v - &g2.v])
    }

    pub fn big_gamma_on(&self, br: Branch) -> Result<&RatFn, InvariantError> {
        let st = self.stage(br)?;
        let [g1, g2] = self.gamma_on(br)?;
        let m = self.m_on(br)?;
        st.big_gamma
            .get_or_init(|| {
                if m.is_zero() {
                    return Err(InvariantError::GammaUndefined);
                }
                let [p, q, r, s] = self.coeffs();
                let num = &g1.v * &g2.v * (&g1.x - &g2.y) + sq(&g2.v) * &g1.y - sq(&g1.v) * &g2.x
                    + &p.v * cube(&g1.v)
                    + 3 * &q.v * sq(&g1.v) * &g2.v
                    + 3 * &r.v * &g1.v * sq(&g2.v)
                    + &s.v * cube(&g2.v);
                Ok(num / m)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn n(&self) -> Result<&RatFn, InvariantError> {
        Ok(&self.n_on(self.primary()?)?.v)
    }

    pub fn phi(&self) -> Result<&[RatFn; 2], InvariantError> {
        self.phi_on(self.primary()?)
    }

    pub fn m(&self) -> Result<&RatFn, InvariantError> {
        self.m_on(self.primary()?)
    }

    pub fn big_omega(&self) -> Result<&RatFn, InvariantError> {
        self.big_omega_on(self.primary()?)
    }

    pub fn big_theta(&self) -> Result<&RatFn, InvariantError> {
        Ok(&self.big_theta_on(self.primary()?)?.v)
    }

    pub fn theta(&self) -> Result<[RatFn; 2], InvariantError> {
        let [t1, t2] = self.theta_on(self.primary()?)?;
        Ok([t1.v.clone(), t2.v.clone()])
    }

    pub fn l(&self) -> Result<&RatFn, InvariantError> {
        Ok(&self.l_on(self.primary()?)?.v)
    }

    pub fn l1(&self) -> Result<&RatFn, InvariantError> {
        Ok(&self.l1_on(self.primary()?)?.v)
    }

    pub fn w(&self) -> Result<&RatFn, InvariantError> {
        self.w_on(self.primary()?)
    }

    pub fn v(&self) -> Result<&RatFn, InvariantError> {
        self.v_on(self.primary()?)
    }

    pub fn xi(&self) -> Result<[RatFn; 2], InvariantError> {
        self.xi_on(self.primary()?)
    }

    pub fn gamma(&self) -> Result<[RatFn; 2], InvariantError> {
        let [g1, g2] = self.gamma_on(self.primary()?)?;
        Ok([g1.v.clone(), g2.v.clone()])
    }

    pub fn big_gamma(&self) -> Result<&RatFn, InvariantError> {
        self.big_gamma_on(self.primary()?)
    }

    pub fn pseudoinvariant_n(&self) -> Result<Pseudo, InvariantError> {
        Ok(Pseudo::scalar("N", self.n()?.clone()))
    }

    pub fn phi_fields(&self) -> Result<[RatFn; 2], InvariantError> {
        self.phi().cloned()
    }

    pub fn pseudoinvariant_m(&self) -> Result<Pseudo, InvariantError> {
        Ok(Pseudo::scalar("M", self.m()?.clone()))
    }

    pub fn pseudoinvariant_omega(&self) -> Result<Pseudo, InvariantError> {
        Ok(Pseudo::scalar("Omega", self.big_omega()?.clone()))
    }

    /// `(omega, Theta, theta)`.
    pub fn omega_theta(&self) -> Result<(Pseudo, Pseudo, Pseudo), InvariantError> {
        let br = self.primary()?;
        Ok((
            Pseudo::vector("omega", self.omega_on(br)?.clone()),
            Pseudo::scalar("Theta", self.big_theta()?.clone()),
            Pseudo::vector("theta", self.theta()?),
        ))
    }

    /// `(L, L1, W, V)`.
    pub fn l_chain(&self) -> Result<(Pseudo, Pseudo, Pseudo, Pseudo), InvariantError> {
        Ok((
            Pseudo::scalar("L", self.l()?.clone()),
            Pseudo::scalar("L1", self.l1()?.clone()),
            Pseudo::scalar("W", self.w()?.clone()),
            Pseudo::scalar("V", self.v()?.clone()),
        ))
    }

    /// `(xi, gamma, Gamma)`.
    pub fn xi_gamma_gamma(&self) -> Result<(Pseudo, [RatFn; 2], Pseudo), InvariantError> {
        Ok((Pseudo::vector("xi", self.xi()?), self.gamma()?, Pseudo::scalar("Gamma", self.big_gamma()?.clone())))
    }

    /// Compares `N`, `M`, `Omega` and `Theta` across the two branch
    /// formulas; empty unless both components of alpha are nonzero.
    pub fn branch_agreement(&self) -> Result<Vec<Agreement>, InvariantError> {
        if self.branch()?.kind != BranchKind::Both {
            return Ok(Vec::new());
        }
        let (a, b) = (Branch::UseA, Branch::UseB);
        let pairs: [(&'static str, RatFn, RatFn); 4] = [
            ("N", self.n_on(a)?.v.clone(), self.n_on(b)?.v.clone()),
            ("M", self.m_on(a)?.clone(), self.m_on(b)?.clone()),
            ("Omega", self.big_omega_on(a)?.clone(), self.big_omega_on(b)?.clone()),
            ("Theta", self.big_theta_on(a)?.v.clone(), self.big_theta_on(b)?.v.clone()),
        ];
        Ok(pairs.into_iter().map(|(name, x, y)| Agreement { name, verdict: self.zero_test(&(x - y)) }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_ode;

    fn rf(s: &str) -> RatFn {
        crate::parse::parse_expression(s).unwrap().to_ratfn().unwrap()
    }

    #[test]
    fn first_equation_values() {
        let pl = Pipeline::new(parse_ode("6*y^2 + x").unwrap());
        let [a, b] = pl.ab();
        assert_eq!(a.v, RatFn::from_int(12));
        assert!(b.v.is_zero());
        assert!(pl.f_condition().verdict.is_zero());
        assert!(pl.f_condition().h.is_zero() && pl.f_condition().g.is_zero());
        assert!(pl.n().unwrap().is_zero());
        assert!(pl.big_omega().unwrap().is_zero());
        assert!(pl.m().unwrap().is_zero());
        assert_eq!(pl.omega_on(Branch::UseA).unwrap()[0], rf("-y"));
        assert_eq!(pl.big_theta().unwrap(), &rf("-y/12"));
        assert_eq!(pl.theta().unwrap(), [rf("-1/12"), RatFn::zero()]);
        assert_eq!(pl.phi().unwrap(), &[RatFn::zero(), RatFn::zero()]);
        assert_eq!(pl.l().unwrap(), &rf("x/1728"));
        assert_eq!(pl.l1().unwrap(), &rf("-1/20736"));
        assert!(pl.w().unwrap().is_zero() && pl.v().unwrap().is_zero());
    }

    #[test]
    fn second_equation_values() {
        let pl = Pipeline::new(parse_ode("2*y^3 + x*y + a").unwrap());
        assert_eq!(pl.ab()[0].v, rf("12*y"));
        assert_eq!(pl.f_condition().h, rf("-144*y"));
        assert!(pl.f_condition().g.is_zero());
        assert_eq!(pl.n().unwrap(), &RatFn::from_int(4));
        assert_eq!(pl.m().unwrap(), &rf("288/5"));
        assert_eq!(pl.phi().unwrap(), &[RatFn::zero(), rf("-3/(5*y)")]);
        assert_eq!(pl.xi().unwrap(), [rf("-24/(5*y)"), RatFn::zero()]);
        assert_eq!(pl.big_gamma().unwrap(), &rf("48*(2*y^3 + x*y + a)/(25*y^3)"));
    }

    #[test]
    fn linear_equation_has_no_alpha() {
        let pl = Pipeline::new(parse_ode("y").unwrap());
        assert!(pl.ab()[0].v.is_zero() && pl.ab()[1].v.is_zero());
        assert_eq!(pl.n().unwrap_err(), InvariantError::BothComponentsZero);
    }

    #[test]
    fn weights_follow_the_table() {
        let pl = Pipeline::new(parse_ode("2*y^3 + x*y + a").unwrap());
        assert_eq!(pl.alpha_field().weight, 2);
        assert_eq!(pl.pseudoinvariant_n().unwrap().weight, 2);
        assert_eq!(pl.pseudoinvariant_m().unwrap().weight, 4);
        assert_eq!(pl.pseudoinvariant_omega().unwrap().weight, 1);
        let (w, t, th) = pl.omega_theta().unwrap();
        assert_eq!((w.weight, t.weight, th.weight), (-1, -2, -1));
        let (l, l1, ww, v) = pl.l_chain().unwrap();
        assert_eq!((l.weight, l1.weight, ww.weight, v.weight), (-4, -5, -6, -3));
        let (xi, _, g) = pl.xi_gamma_gamma().unwrap();
        assert_eq!((xi.weight, g.weight), (3, 4));
    }
}
