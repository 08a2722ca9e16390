use astro_float::RoundingMode;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use painleve_core::expr::{evaluate_numeric, is_identically_zero, Expr, HpFloat, Point, Var, Verdict};
use painleve_core::parse::{extract_cubic_coefficients, parse_expression};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::x()),
        Just(Expr::y()),
        Just(Expr::p()),
        Just(Expr::param("a")),
        (-3i64..=3).prop_map(Expr::int),
        (1i64..=3, 2i64..=4).prop_map(|(n, d)| Expr::rational(n, d)),
    ]
}

fn tree(trig: bool) -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 24, 3, move |inner| {
        let base = prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul),
            (inner.clone(), 0i64..=3).prop_map(|(e, k)| Expr::pow(e, k)),
            (inner.clone(), 1i64..=3).prop_map(|(e, k)| Expr::pow(Expr::add(vec![e, Expr::x()]), -k)),
        ];
        if trig {
            prop_oneof![
                4 => base,
                1 => inner.clone().prop_map(Expr::sin),
                1 => inner.prop_map(Expr::cos),
            ]
            .boxed()
        } else {
            base.boxed()
        }
    })
}

fn defined(e: &Expr) -> bool {
    e.try_normalize().is_ok()
}

fn point(x: (i64, i64), y: (i64, i64), p: (i64, i64), a: (i64, i64)) -> Point {
    let q = |(n, d): (i64, i64)| BigRational::new(BigInt::from(n), BigInt::from(d));
    Point::new().with("x", q(x)).with("y", q(y)).with("p", q(p)).with("a", q(a))
}

fn coord() -> impl Strategy<Value = (i64, i64)> {
    (1i64..=97, 50i64..=97).prop_map(|(n, d)| (n + d, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn normalize_is_idempotent(e in tree(true)) {
        prop_assume!(defined(&e));
        let once = e.normalize();
        prop_assert_eq!(once.normalize(), once);
    }

    #[test]
    fn mixed_partials_commute(e in tree(true)) {
        prop_assume!(defined(&e));
        let xy = e.differentiate(Var::X).differentiate(Var::Y);
        let yx = e.differentiate(Var::Y).differentiate(Var::X);
        let diff = Expr::add(vec![xy, Expr::mul(vec![Expr::int(-1), yx])]);
        prop_assert!(diff.normalize().is_zero_literal());
    }

    #[test]
    fn rational_expressions_never_abstain(e in tree(false)) {
        prop_assume!(defined(&e));
        prop_assert_ne!(is_identically_zero(&e).verdict, Verdict::Unknown);
    }

    #[test]
    fn normalization_preserves_values(e in tree(true), x in coord(), y in coord(), p in coord(), a in coord()) {
        prop_assume!(defined(&e));
        let digits = 30;
        let pt = point(x, y, p, a);
        let (Ok(u), Ok(v)) = (evaluate_numeric(&e, &pt, digits), evaluate_numeric(&e.normalize(), &pt, digits)) else {
            return Ok(());
        };
        let bits = 200;
        let d = HpFloat(u.inner().sub(v.inner(), bits, RoundingMode::ToEven).abs()).to_f64();
        let scale = u.to_f64().abs().max(v.to_f64().abs()).max(1e-300);
        prop_assert!(d <= 1e-24 * scale || d < 1e-280, "{} vs {}", u, v);
    }

    #[test]
    fn printing_round_trips(e in tree(true)) {
        prop_assume!(defined(&e));
        let back = parse_expression(&e.to_string()).expect("printed form parses");
        prop_assert_eq!(back.normalize(), e.normalize());
    }

    #[test]
    fn cubic_extraction_round_trips(cs in prop::collection::vec(tree(true), 4)) {
        prop_assume!(cs.iter().all(|c| !c.contains_var(Var::P) && defined(c)));
        let rhs = Expr::add(
            cs.iter().enumerate().map(|(k, c)| Expr::mul(vec![c.clone(), Expr::pow(Expr::p(), k as i64)])).collect(),
        );
        let ode = extract_cubic_coefficients(&rhs).expect("cubic in p");
        let back = Expr::add(vec![ode.rhs(), Expr::mul(vec![Expr::int(-1), rhs])]);
        prop_assert!(back.normalize().is_zero_literal());
    }
}

#[test]
fn trigonometric_identity_is_zero() {
    let e = parse_expression("sin(x*y)^2 + cos(x*y)^2 - 1").unwrap();
    assert_eq!(is_identically_zero(&e).verdict, Verdict::Zero);
}
