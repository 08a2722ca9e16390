use criterion::{black_box, criterion_group, criterion_main, Criterion};

use painleve_core::classify::classify;
use painleve_core::expr::RatFn;
use painleve_core::parse::{parse_expression, parse_ode};
use painleve_core::transform::{
    map_painleve2, painleve1_ode, painleve2_ode, pullback_ode, verify_map, PointMap, VerifyOptions,
};

const POLAR_PI: &str = "-sin(y)^3*(6*x*cos(y)^2 + sin(y)) \
    + (1/x)*(-18*x^3*cos(y)^3*sin(y)^2 - 3*x^2*sin(y)^3*cos(y) - 2)*p \
    - (18*x^3*cos(y)^4*sin(y) + 3*x^2*sin(y)^2*cos(y)^2)*p^2 \
    - (6*x^4*cos(y)^5 + x^3*sin(y)*cos(y)^3 + x)*p^3";

fn rf(s: &str) -> RatFn {
    parse_expression(s).unwrap().to_ratfn().unwrap()
}

fn classification(c: &mut Criterion) {
    let pi = painleve1_ode();
    let pii = painleve2_ode(&rf("a"));
    let polar = parse_ode(POLAR_PI).unwrap();
    let sheared =
        pullback_ode(&painleve2_ode(&RatFn::one()), &PointMap::new(rf("x + y^2"), rf("2*y")).unwrap()).unwrap();
    let mut g = c.benchmark_group("classify");
    g.bench_function("first", |b| b.iter(|| classify(black_box(&pi))));
    g.bench_function("second", |b| b.iter(|| classify(black_box(&pii))));
    g.bench_function("polar_pullback", |b| b.iter(|| classify(black_box(&polar))));
    g.sample_size(10);
    g.bench_function("second_sheared", |b| b.iter(|| classify(black_box(&sheared))));
    g.finish();
}

fn arithmetic(c: &mut Criterion) {
    let num = rf("(x^3 - y^2 + a)^4*(x + y)^3*(2*x*y - 1)^2");
    let den = rf("(x^3 - y^2 + a)^2*(x - y)*(2*x*y - 1)^3");
    c.bench_function("gcd_cancellation", |b| b.iter(|| black_box(&num).div(black_box(&den)).unwrap()));
}

fn verification(c: &mut Criterion) {
    let polar = parse_ode(POLAR_PI).unwrap();
    let map = PointMap::new(rf("x*sin(y)"), rf("x*cos(y)")).unwrap();
    let target = painleve1_ode();
    let opts = VerifyOptions::default();
    c.bench_function("verify_polar_pullback", |b| {
        b.iter(|| verify_map(&polar, &target, black_box(&map), &opts).unwrap())
    });
    let rep = classify(&parse_ode("2*y^3 - 3*x*y - 5*y - 7").unwrap());
    c.bench_function("map_cubic_family", |b| b.iter(|| map_painleve2(black_box(&rep), false, &opts).unwrap()));
}

criterion_group!(benches, classification, arithmetic, verification);
criterion_main!(benches);
