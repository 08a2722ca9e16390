//! Printing in the input grammar, so that output re-parses.

use std::fmt::{self, Display, Formatter, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Expr, Node};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW: u8 = 4;

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

fn is_atomic(e: &Expr) -> bool {
    match e.node() {
        Node::Num(q) => q.is_integer() && !q.is_negative(),
        Node::Var(_) | Node::Param(_) | Node::Func(..) => true,
        _ => false,
    }
}

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => PREC_ADD,
        Node::Num(q) if q.is_negative() || !q.is_integer() => PREC_MUL,
        Node::Mul(_) => PREC_MUL,
        Node::Pow(_, k) if *k < 0 => PREC_MUL,
        Node::RatPow(_, q) if q.is_negative() => PREC_MUL,
        Node::Pow(..) | Node::RatPow(..) => PREC_POW,
        _ => 5,
    }
}

fn write_expr(f: &mut Formatter<'_>, e: &Expr, ctx: u8) -> fmt::Result {
    if precedence(e) < ctx {
        f.write_char('(')?;
        write_bare(f, e)?;
        return f.write_char(')');
    }
    write_bare(f, e)
}

fn write_bare(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(q) => write_rational(f, q),
        Node::Var(v) => f.write_str(v.name()),
        Node::Param(n) => f.write_str(n),
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(f, t, PREC_ADD)?;
                } else if t.is_negative_term() {
                    f.write_str(" - ")?;
                    write_expr(f, &-t, PREC_MUL)?;
                } else {
                    f.write_str(" + ")?;
                    write_expr(f, t, PREC_MUL)?;
                }
            }
            Ok(())
        }
        Node::Mul(_) | Node::Pow(..) | Node::RatPow(..) => write_product(f, e),
        Node::Func(func, arg) => write!(f, "{}({})", func.name(), arg),
    }
}

fn write_rational(f: &mut Formatter<'_>, q: &BigRational) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// Splits a product into sign, numerator and denominator parts.
fn write_product(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    let factors: Vec<Expr> = match e.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![e.clone()],
    };
    let mut coef = BigRational::one();
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for fac in factors {
        match fac.node() {
            Node::Num(q) => coef *= q,
            Node::Pow(b, k) if *k < 0 => den.push(Expr::pow(b.clone(), -k)),
            Node::RatPow(b, q) if q.is_negative() => den.push(Expr::rat_pow(b.clone(), -q)),
            _ => num.push(fac),
        }
    }
    if coef.is_negative() {
        f.write_char('-')?;
        coef = -coef;
    }
    let cn: &BigInt = coef.numer();
    let cd: &BigInt = coef.denom();
    let mut first = true;
    if !cn.is_one() || num.is_empty() {
        write!(f, "{cn}")?;
        first = false;
    }
    for fac in &num {
        if !first {
            f.write_char('*')?;
        }
        write_factor(f, fac)?;
        first = false;
    }
    let nden = den.len() + usize::from(!cd.is_one());
    if nden == 0 {
        return Ok(());
    }
    f.write_char('/')?;
    if nden > 1 {
        f.write_char('(')?;
    }
    let mut first = true;
    if !cd.is_one() {
        write!(f, "{cd}")?;
        first = false;
    }
    for fac in &den {
        if !first {
            f.write_char('*')?;
        }
        write_factor(f, fac)?;
        first = false;
    }
    if nden > 1 {
        f.write_char(')')?;
    }
    Ok(())
}

fn write_factor(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Pow(b, k) => {
            write_base(f, b)?;
            write!(f, "^{k}")
        }
        Node::RatPow(b, q) => {
            write_base(f, b)?;
            write!(f, "^({}/{})", q.numer(), q.denom())
        }
        _ => write_expr(f, e, PREC_POW),
    }
}

fn write_base(f: &mut Formatter<'_>, b: &Expr) -> fmt::Result {
    if is_atomic(b) {
        write_bare(f, b)
    } else {
        f.write_char('(')?;
        write_bare(f, b)?;
        f.write_char(')')
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Expr, RatFn, Var};

    fn show(r: RatFn) -> String {
        r.to_expr().to_string()
    }

    #[test]
    fn canonical_forms_print_like_the_grammar() {
        let x = RatFn::var(Var::X);
        let y = RatFn::var(Var::Y);
        let a = RatFn::param("a");
        let i1 = x.powi(5).unwrap().mul(&RatFn::from_int(12)).inv().unwrap();
        assert_eq!(show(i1), "1/(12*x^5)");
        assert_eq!(show(RatFn::from_int(12).mul(&y).mul(&y).div(&x).unwrap()), "12*y^2/x");
        assert_eq!(show(x.div(&RatFn::from_int(1728)).unwrap()), "x/1728");
        assert_eq!(show(RatFn::ratio(-1, 20736)), "-1/20736");
        let i6 = RatFn::from_int(2)
            .mul(&x)
            .mul(&y)
            .add(&RatFn::from_int(3).mul(&a))
            .div(&RatFn::from_int(10).mul(&y.powi(3).unwrap()))
            .unwrap();
        assert_eq!(show(i6), "(2*x*y + 3*a)/(10*y^3)");
        assert_eq!(show(y.neg().div(&RatFn::from_int(12)).unwrap()), "-y/12");
    }

    #[test]
    fn subtraction_and_functions() {
        let e = Expr::x() - Expr::sin(Expr::y()) * 3;
        assert_eq!(e.to_string(), "x - 3*sin(y)");
        let r = Expr::rat_pow(Expr::x() + 1, num_rational::BigRational::new(1.into(), 3.into()));
        assert_eq!(r.to_string(), "(x + 1)^(1/3)");
    }
}
