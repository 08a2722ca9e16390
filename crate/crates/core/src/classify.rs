//! Equivalence tests against PI, PII and PIII(0, b, 0, 0).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::numeric::Evaluator;
use crate::expr::zero::random_point;
use crate::expr::{Expr, RatFn, Var, Verdict, ZeroVerdict};
use crate::invariants::{Agreement, BranchChoice, InvariantError, Pipeline, Pseudo};
use crate::parse::OdeCubic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    PainleveI,
    PainleveII,
    PainleveIIIZero,
}

impl Target {
    pub fn short(self) -> &'static str {
        match self {
            Target::PainleveI => "PI",
            Target::PainleveII => "PII",
            Target::PainleveIIIZero => "PIII(0,b,0,0)",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CondStatus {
    Holds,
    Fails,
    Unknown,
}

impl fmt::Display for CondStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CondStatus::Holds => "holds",
            CondStatus::Fails => "fails",
            CondStatus::Unknown => "unknown",
        })
    }
}

/// One numbered condition of an equivalence test.
#[derive(Clone, Debug)]
pub struct Condition {
    pub target: Target,
    pub index: u8,
    /// The requirement, e.g. `N = 0`.
    pub statement: &'static str,
    pub status: CondStatus,
    pub note: String,
}

impl Condition {
    pub fn label(&self) -> String {
        format!("{} condition {}", self.target.short(), self.index)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {}", self.label(), self.statement, self.status)?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct NamedInvariant {
    pub name: &'static str,
    pub value: RatFn,
}

/// The PII parameter, fixed up to sign.
#[derive(Clone, Debug)]
pub struct JValue {
    pub value: RatFn,
    pub squared: RatFn,
    /// True when `J^2` is a perfect square, so no radical remains.
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct TheoremCheck {
    pub target: Target,
    pub outcome: Outcome,
    pub conditions: Vec<Condition>,
    pub invariants: Vec<NamedInvariant>,
    pub j: Option<JValue>,
    pub warnings: Vec<String>,
}

impl TheoremCheck {
    pub fn invariant(&self, name: &str) -> Option<&RatFn> {
        self.invariants.iter().find(|i| i.name == name).map(|i| &i.value)
    }

    pub fn failed(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| c.status == CondStatus::Fails).collect()
    }

    pub fn unknown(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| c.status == CondStatus::Unknown).collect()
    }
}

#[derive(Clone, Debug)]
pub enum Classification {
    PainleveI,
    PainleveII { j: RatFn },
    PainleveIIIZero,
    NotEquivalent { failed: Vec<Condition> },
    Indeterminate { unknown: Vec<Condition> },
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::PainleveI => "PainleveI",
            Classification::PainleveII { .. } => "PainleveII",
            Classification::PainleveIIIZero => "PainleveIIIZeroParams",
            Classification::NotEquivalent { .. } => "NotEquivalent",
            Classification::Indeterminate { .. } => "Indeterminate",
        }
    }

    pub fn target(&self) -> Option<Target> {
        match self {
            Classification::PainleveI => Some(Target::PainleveI),
            Classification::PainleveII { .. } => Some(Target::PainleveII),
            Classification::PainleveIIIZero => Some(Target::PainleveIIIZero),
            _ => None,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::PainleveII { j } => write!(f, "PainleveII (J = ±({}))", j),
            other => f.write_str(other.name()),
        }
    }
}

/// Everything the classifier computed for one equation.
#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub ode: OdeCubic,
    pub branch: Option<BranchChoice>,
    pub pseudos: Vec<Pseudo>,
    pub checks: Vec<TheoremCheck>,
    pub agreement: Vec<Agreement>,
    pub classification: Classification,
    pub warnings: Vec<String>,
}

impl InvariantReport {
    pub fn check(&self, t: Target) -> Option<&TheoremCheck> {
        self.checks.iter().find(|c| c.target == t)
    }

    pub fn conditions(&self) -> impl Iterator<Item = &Condition> {
        self.checks.iter().flat_map(|c| c.conditions.iter())
    }

    /// Invariants of the winning test, or of every test when none passed.
    pub fn invariants(&self) -> Vec<(String, &RatFn)> {
        let winner = self.classification.target();
        let mut out = Vec::new();
        for c in &self.checks {
            if winner.is_some_and(|t| t != c.target) {
                continue;
            }
            for i in &c.invariants {
                let name =
                    if winner.is_some() { i.name.to_string() } else { format!("{}:{}", c.target.short(), i.name) };
                out.push((name, &i.value));
            }
        }
        out
    }

    pub fn j(&self) -> Option<&JValue> {
        self.check(Target::PainleveII).and_then(|c| c.j.as_ref())
    }
}

struct Conds {
    target: Target,
    list: Vec<Condition>,
}

impl Conds {
    fn new(target: Target) -> Conds {
        Conds { target, list: Vec::new() }
    }

    fn push(&mut self, statement: &'static str, status: CondStatus, note: impl Into<String>) -> CondStatus {
        let index = self.list.len() as u8 + 1;
        self.list.push(Condition { target: self.target, index, statement, status, note: note.into() });
        status
    }

    /// Records `value = 0` (`want_zero`) or `value != 0`.
    fn zero(
        &mut self,
        statement: &'static str,
        want_zero: bool,
        value: Result<ZeroVerdict, InvariantError>,
    ) -> CondStatus {
        match value {
            Ok(v) => {
                let status = match (v.verdict, want_zero) {
                    (Verdict::Unknown, _) => CondStatus::Unknown,
                    (Verdict::Zero, true) | (Verdict::NonZero, false) => CondStatus::Holds,
                    _ => CondStatus::Fails,
                };
                self.push(statement, status, v.note)
            }
            Err(e) => self.push(statement, status_of_error(&e), e.to_string()),
        }
    }

    fn outcome(&self) -> Outcome {
        if self.list.iter().any(|c| c.status == CondStatus::Fails) {
            Outcome::Fail
        } else if self.list.iter().any(|c| c.status == CondStatus::Unknown) {
            Outcome::Indeterminate
        } else {
            Outcome::Pass
        }
    }

    fn failed(&self) -> bool {
        self.list.last().is_some_and(|c| c.status == CondStatus::Fails)
    }
}

fn status_of_error(e: &InvariantError) -> CondStatus {
    match e {
        InvariantError::BranchUndecided(_) => CondStatus::Unknown,
        _ => CondStatus::Fails,
    }
}

/// Shared first condition: `F = 0` while alpha does not vanish.
fn alpha_condition(pl: &Pipeline, c: &mut Conds) -> CondStatus {
    const S: &str = "F = 0 and alpha != 0";
    match pl.branch() {
        Err(InvariantError::BothComponentsZero) => c.push(S, CondStatus::Fails, "alpha ≡ 0 (A ≡ 0 and B ≡ 0)"),
        Err(e) => c.push(S, status_of_error(&e), e.to_string()),
        Ok(_) => {
            let f = pl.f_condition();
            let st = match f.verdict.verdict {
                Verdict::Zero => CondStatus::Holds,
                Verdict::NonZero => CondStatus::Fails,
                Verdict::Unknown => CondStatus::Unknown,
            };
            c.push(S, st, format!("AG + BH: {}", f.verdict.note))
        }
    }
}

fn verdict_of(pl: &Pipeline, r: Result<&RatFn, InvariantError>) -> Result<ZeroVerdict, InvariantError> {
    r.map(|v| pl.zero_test(v))
}

fn finish(target: Target, c: Conds, invariants: Vec<NamedInvariant>) -> TheoremCheck {
    let outcome = c.outcome();
    TheoremCheck { target, outcome, conditions: c.list, invariants, j: None, warnings: Vec::new() }
}

type Getter = fn(&Pipeline) -> Result<&RatFn, InvariantError>;

pub fn check_painleve1(pl: &Pipeline) -> TheoremCheck {
    let t = Target::PainleveI;
    let mut c = Conds::new(t);
    alpha_condition(pl, &mut c);
    let steps: [(&'static str, bool, Getter); 6] = [
        ("Omega = 0", true, Pipeline::big_omega),
        ("N = 0", true, Pipeline::n),
        ("W = 0", true, Pipeline::w),
        ("V = 0", true, Pipeline::v),
        ("Theta != 0", false, Pipeline::big_theta),
        ("L1 != 0", false, Pipeline::l1),
    ];
    for (statement, want_zero, get) in steps {
        if c.failed() {
            return finish(t, c, Vec::new());
        }
        let v = verdict_of(pl, get(pl));
        c.zero(statement, want_zero, v);
    }
    if c.outcome() != Outcome::Pass {
        return finish(t, c, Vec::new());
    }
    let (l, l1, th) = (pl.l().unwrap(), pl.l1().unwrap(), pl.big_theta().unwrap());
    let i1 = l1.powi(4).and_then(|a| a.div(&l.powi(5)?));
    let i2 = th.powi(2).and_then(|a| a.div(l));
    match (i1, i2) {
        (Ok(i1), Ok(i2)) => {
            finish(t, c, vec![NamedInvariant { name: "I1", value: i1 }, NamedInvariant { name: "I2", value: i2 }])
        }
        _ => {
            let mut out = finish(t, c, Vec::new());
            out.outcome = Outcome::Indeterminate;
            out.warnings.push("L vanishes although L1 does not; invariants undefined".into());
            out
        }
    }
}

/// Conditions 1-3 shared by PII and PIII, then `I1 = target`.
fn check_i1(pl: &Pipeline, t: Target, want: BigRational, statement: &'static str) -> (Conds, Option<RatFn>) {
    let mut c = Conds::new(t);
    alpha_condition(pl, &mut c);
    if c.failed() {
        return (c, None);
    }
    let v = verdict_of(pl, pl.big_omega());
    c.zero("Omega = 0", true, v);
    if c.failed() {
        return (c, None);
    }
    let v = verdict_of(pl, pl.m());
    c.zero("M != 0", false, v);
    if c.failed() {
        return (c, None);
    }
    let (m, n) = match (pl.m(), pl.n()) {
        (Ok(m), Ok(n)) => (m, n),
        (Err(e), _) | (_, Err(e)) => {
            c.push(statement, status_of_error(&e), e.to_string());
            return (c, None);
        }
    };
    let i1 = match n.powi(2).and_then(|n2| m.div(&n2)) {
        Ok(v) => v,
        Err(_) => {
            c.push(statement, CondStatus::Fails, "N ≡ 0, so I1 = M/N^2 is undefined");
            return (c, None);
        }
    };
    let diff = &i1 - &RatFn::from_rational(&want);
    let v = pl.zero_test(&diff);
    c.zero(statement, true, Ok(ZeroVerdict { note: format!("I1 = {}", i1), ..v }));
    (c, Some(i1))
}

pub fn check_painleve2(pl: &Pipeline) -> TheoremCheck {
    let t = Target::PainleveII;
    let (c, i1) = check_i1(pl, t, BigRational::new(18.into(), 5.into()), "I1 = 18/5");
    if c.outcome() != Outcome::Pass {
        return finish(t, c, Vec::new());
    }
    let i1 = i1.expect("I1 computed");
    let mut out = finish(t, c, Vec::new());
    match pii_invariants(pl) {
        Ok((i3, i6, i9)) => {
            let j = j_invariant(pl, &i3, &i6, &i9);
            out.invariants = vec![
                NamedInvariant { name: "I1", value: i1 },
                NamedInvariant { name: "I3", value: i3 },
                NamedInvariant { name: "I6", value: i6 },
                NamedInvariant { name: "I9", value: i9 },
            ];
            match j {
                Ok(j) => {
                    if j.squared.as_rational().is_some_and(|q| num_traits::Signed::is_negative(&q)) {
                        out.warnings
                            .push(format!("J^2 = {} is negative: no real change of variables exists", j.squared));
                    }
                    out.invariants.push(NamedInvariant { name: "J", value: j.value.clone() });
                    out.j = Some(j);
                }
                Err(w) => {
                    out.outcome = Outcome::Indeterminate;
                    out.warnings.push(w);
                }
            }
        }
        Err(w) => {
            out.outcome = Outcome::Indeterminate;
            out.warnings.push(w);
        }
    }
    out
}

pub fn check_painleve3zero(pl: &Pipeline) -> TheoremCheck {
    let t = Target::PainleveIIIZero;
    let (c, i1) = check_i1(pl, t, BigRational::new(3.into(), 5.into()), "I1 = 3/5");
    if c.outcome() != Outcome::Pass {
        return finish(t, c, Vec::new());
    }
    let mut inv = vec![NamedInvariant { name: "I1", value: i1.expect("I1 computed") }];
    let mut out = finish(t, c, Vec::new());
    match pl.big_gamma().map_err(|e| e.to_string()).and_then(|g| g.div(pl.m().unwrap()).map_err(|e| e.to_string())) {
        Ok(i3) => inv.push(NamedInvariant { name: "I3", value: i3 }),
        Err(e) => out.warnings.push(format!("I3 unavailable: {e}")),
    }
    out.invariants = inv;
    out.warnings.push("no explicit change of variables: the invariants of PIII(0,b,0,0) are constants".into());
    out
}

/// `(I3, I6, I9)`.
fn pii_invariants(pl: &Pipeline) -> Result<(RatFn, RatFn, RatFn), String> {
    let m = pl.m().map_err(|e| e.to_string())?;
    let n = pl.n().map_err(|e| e.to_string())?;
    let i3 = pl.big_gamma().map_err(|e| e.to_string())?.div(m).map_err(|e| e.to_string())?;
    let (i3x, i3y) = (i3.diff(Var::X), i3.diff(Var::Y));
    let [a, b] = pl.ab();
    let xi = pl.xi().map_err(|e| e.to_string())?;
    let i6 = (&b.v * &i3x - &a.v * &i3y).div(n).map_err(|e| e.to_string())?;
    let d = &xi[0] * &i3x + &xi[1] * &i3y;
    let i9 = (&d * &d).div(&n.powi(3).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    Ok((i3, i6, i9))
}

/// `J = (4 + 10 I6 - 60 I3) / (50 sqrt(I9))`, taken through `J^2`. The
/// sign is the one given by the principal root at a sample point.
pub fn j_invariant(pl: &Pipeline, i3: &RatFn, i6: &RatFn, i9: &RatFn) -> Result<JValue, String> {
    if i9.is_zero() {
        return Err("I9 ≡ 0, so J is undefined".into());
    }
    let num = 4 + 10 * i6 - 60 * i3;
    let j2 = (&num * &num).div(&(2500 * i9)).map_err(|e| e.to_string())?;
    for v in [Var::X, Var::Y] {
        let d = pl.zero_test(&j2.diff(v));
        match d.verdict {
            Verdict::Zero => {}
            Verdict::NonZero => return Err(format!("J^2 = {} depends on {}", j2, v.name())),
            Verdict::Unknown => {
                if !numerically_constant(&j2, v) {
                    return Err(format!("cannot confirm that J^2 is constant in {}", v.name()));
                }
            }
        }
    }
    let (outside, inside) = j2.split_root(2);
    let exact = inside.is_constant() && inside.as_rational().is_some_and(|q| q.is_one());
    let mut value = if exact {
        outside
    } else {
        let root = inside.rat_pow(&BigRational::new(BigInt::one(), BigInt::from(2))).map_err(|e| e.to_string())?;
        &outside * &root
    };
    let principal = num.to_expr() / (50 * Expr::rat_pow(i9.to_expr(), BigRational::new(1.into(), 2.into())));
    if let Some(negate) = sign_differs(&principal, &value.to_expr()) {
        if negate {
            value = -value;
        }
    }
    Ok(JValue { value, squared: j2, exact })
}

fn numerically_constant(r: &RatFn, v: Var) -> bool {
    let e = r.to_expr();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a5e);
    let mut ev = Evaluator::new(40);
    let mut seen = 0;
    for _ in 0..60 {
        let mut pt = random_point(&e, &mut rng);
        let Ok((a, _)) = ev.eval(&e, &pt) else { continue };
        let name = crate::expr::SymbolName::Var(v);
        let shifted = pt.get(&name).cloned().expect("sampled variable") + BigRational::new(1.into(), 7.into());
        pt.set(name, shifted);
        let Ok((b, _)) = ev.eval(&e, &pt) else { continue };
        let diff = crate::expr::numeric::to_f64(&ev.sub(&a, &b)).abs();
        let scale = crate::expr::numeric::to_f64(&a).abs().max(1.0);
        if diff > 1e-20 * scale {
            return false;
        }
        seen += 1;
        if seen >= 8 {
            return true;
        }
    }
    false
}

/// Whether `b` must be negated to share the sign of `a`, judged at the
/// first sample point where both evaluate to nonzero values.
fn sign_differs(a: &Expr, b: &Expr) -> Option<bool> {
    let both = a.clone() + b.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5167);
    let mut ev = Evaluator::new(40);
    for _ in 0..60 {
        let pt = random_point(&both, &mut rng);
        let (Ok((va, _)), Ok((vb, _))) = (ev.eval(a, &pt), ev.eval(b, &pt)) else { continue };
        if va.is_zero() || vb.is_zero() {
            continue;
        }
        return Some(va.is_negative() != vb.is_negative());
    }
    None
}

pub fn classify(ode: &OdeCubic) -> InvariantReport {
    classify_with(Pipeline::new(ode.clone()))
}

pub fn classify_with(pl: Pipeline) -> InvariantReport {
    let checks = vec![check_painleve1(&pl), check_painleve2(&pl), check_painleve3zero(&pl)];
    let mut warnings = Vec::new();
    let passed: Vec<&TheoremCheck> = checks.iter().filter(|c| c.outcome == Outcome::Pass).collect();
    if passed.len() > 1 {
        warnings.push(format!(
            "more than one test passed ({}); keeping the first",
            passed.iter().map(|c| c.target.short()).collect::<Vec<_>>().join(", ")
        ));
    }
    let classification = match passed.first() {
        Some(c) => match c.target {
            Target::PainleveI => Classification::PainleveI,
            Target::PainleveII => Classification::PainleveII { j: c.j.as_ref().expect("J computed").value.clone() },
            Target::PainleveIIIZero => Classification::PainleveIIIZero,
        },
        None if checks.iter().any(|c| c.outcome == Outcome::Indeterminate) => Classification::Indeterminate {
            unknown: checks
                .iter()
                .filter(|c| c.outcome == Outcome::Indeterminate)
                .flat_map(|c| c.unknown().into_iter().cloned())
                .collect(),
        },
        None => Classification::NotEquivalent {
            failed: checks.iter().flat_map(|c| c.failed().into_iter().cloned()).collect(),
        },
    };
    for c in &checks {
        warnings.extend(c.warnings.iter().cloned());
    }
    let agreement = pl.branch_agreement().unwrap_or_default();
    for a in &agreement {
        if pl.f_condition().verdict.is_zero() && !a.verdict.is_zero() {
            let n_zero = pl.n().map(|n| pl.zero_test(n).is_zero()).unwrap_or(false);
            if a.name == "Theta" && !n_zero {
                warnings.push("branch formulas disagree on Theta, which is only covariant when N = 0".into());
            } else {
                warnings.push(format!("branch formulas disagree on {}: {}", a.name, a.verdict.note));
            }
        }
    }
    if !pl.ode().coefficients().iter().all(|c| c.vars().iter().all(|s| !matches!(s, crate::expr::Symbol::Param(_)))) {
        warnings.push("parameters are treated as generic; special values may violate nonvanishing conditions".into());
    }
    InvariantReport {
        ode: pl.ode().clone(),
        branch: pl.branch().ok().cloned(),
        pseudos: collect_pseudos(&pl),
        checks,
        agreement,
        classification,
        warnings,
    }
}

fn collect_pseudos(pl: &Pipeline) -> Vec<Pseudo> {
    let mut out = vec![pl.alpha_field()];
    if pl.branch().is_err() {
        return out;
    }
    out.extend(pl.pseudoinvariant_n().ok());
    out.extend(pl.pseudoinvariant_m().ok());
    out.extend(pl.pseudoinvariant_omega().ok());
    if let Ok((w, t, th)) = pl.omega_theta() {
        out.extend([w, t, th]);
    }
    if let Ok((l, l1, w, v)) = pl.l_chain() {
        out.extend([l, l1, w, v]);
    }
    if let Ok((xi, _, g)) = pl.xi_gamma_gamma() {
        out.extend([xi, g]);
    }
    out
}
