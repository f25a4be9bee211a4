//! Strategies and kernel properties shared by the property suite and the
//! acceptance runner.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use symcheck::expr::{
    derive, is_zero_seeded, normalize, ConstraintSet, ElemFn, Expr, JetCoord, Partial, RatFn, Symbol,
};
use symcheck::jet::{total_derivative_rat, JetSpace, MultiIndex};
use symcheck::symmetry::{Prolongation, VectorField};

pub const CASES: u32 = 1000;

pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed_0001),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn leaf(jets: bool) -> BoxedStrategy<Expr> {
    let mut options: Vec<BoxedStrategy<Expr>> = vec![
        Just(Expr::indep("t")).boxed(),
        Just(Expr::indep("x")).boxed(),
        Just(Expr::dep("u")).boxed(),
        (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::rational(n, d)).boxed(),
        Just(Expr::ufn("g", vec![Expr::indep("t"), Expr::indep("x")])).boxed(),
    ];
    if jets {
        options.push(Just(Expr::jet("u", &["x"])).boxed());
        options.push(Just(Expr::jet("u", &["t"])).boxed());
        options.push(Just(Expr::jet("u", &["x", "x"])).boxed());
    }
    proptest::strategy::Union::new(options).boxed()
}

/// Random expressions over `t, x, u` (and low jets when `jets`).
pub fn expr(jets: bool) -> BoxedStrategy<Expr> {
    tree(jets, 3, 12, true)
}

pub fn tree(jets: bool, depth: u32, size: u32, quotients: bool) -> BoxedStrategy<Expr> {
    leaf(jets)
        .prop_recursive(depth, size, 2, move |inner| {
            let mut ops: Vec<BoxedStrategy<Expr>> = vec![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::sum([a, b]))
                    .boxed(),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::product([a, b]))
                    .boxed(),
                (
                    inner.clone(),
                    prop_oneof![Just(ElemFn::Exp), Just(ElemFn::Sin), Just(ElemFn::Tanh)],
                )
                    .prop_map(|(a, f)| Expr::func(f, a))
                    .boxed(),
                (inner.clone(), 2i64..=3).prop_map(|(a, k)| a.powi(k)).boxed(),
            ];
            if quotients {
                ops.push(
                    (inner, leaf(jets), 1i64..=3)
                        .prop_map(|(a, b, k)| Expr::product([a, Expr::sum([b.powi(2), Expr::int(k)]).recip()]))
                        .boxed(),
                );
            }
            proptest::strategy::Union::new(ops)
        })
        .boxed()
}

pub fn rat(e: &Expr) -> RatFn {
    RatFn::from_expr(e).expect("well-formed")
}

pub fn assert_same(a: &RatFn, b: &RatFn) -> Result<(), TestCaseError> {
    let d = a.sub(b);
    if d.is_zero() {
        return Ok(());
    }
    let z = is_zero_seeded(&d, &ConstraintSet::default(), 11).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(z.is_zero(), "difference {d}");
    Ok(())
}

pub fn x() -> Symbol {
    Symbol::indep("x")
}

pub fn t() -> Symbol {
    Symbol::indep("t")
}

pub fn normalize_is_idempotent(e: Expr) -> Result<(), TestCaseError> {
    let once = normalize(&e).unwrap();
    let twice = normalize(&once).unwrap();
    prop_assert_eq!(once, twice);
    Ok(())
}

pub fn derivative_is_linear(a: Expr, b: Expr, p: i64, q: i64) -> Result<(), TestCaseError> {
    let (ra, rb) = (rat(&a), rat(&b));
    let k = RatFn::from_expr(&Expr::rational(p, q)).unwrap();
    let lhs = ra.mul(&k).add(&rb);
    for d in [
        Partial(x()),
        Partial(t()),
        Partial(Symbol::Jet(JetCoord::with_derivs("u", ["x"]))),
    ] {
        let left = derive(&lhs, &d);
        let right = derive(&ra, &d).mul(&k).add(&derive(&rb, &d));
        assert_same(&left, &right)?;
    }
    let dx = |r: &RatFn| total_derivative_rat(r, &x().name().clone());
    assert_same(&dx(&lhs), &dx(&ra).mul(&k).add(&dx(&rb)))
}

pub fn mixed_partials_commute(e: Expr) -> Result<(), TestCaseError> {
    let r = rat(&e);
    let xt = derive(&derive(&r, &Partial(x())), &Partial(t()));
    let tx = derive(&derive(&r, &Partial(t())), &Partial(x()));
    assert_same(&xt, &tx)?;
    let u = Symbol::dep("u");
    let xu = derive(&derive(&r, &Partial(x())), &Partial(u.clone()));
    let ux = derive(&derive(&r, &Partial(u)), &Partial(x()));
    assert_same(&xu, &ux)
}

pub fn total_derivatives_commute(e: Expr) -> Result<(), TestCaseError> {
    let r = rat(&e);
    let (xn, tn) = (x().name().clone(), t().name().clone());
    let xt = total_derivative_rat(&total_derivative_rat(&r, &xn), &tn);
    let tx = total_derivative_rat(&total_derivative_rat(&r, &tn), &xn);
    assert_same(&xt, &tx)
}

pub fn check_prolongation([xi_t, xi_x, eta]: [Expr; 3], order: u32) -> Result<(), TestCaseError> {
    let space = JetSpace::new(&["t", "x"], &["u"], order).unwrap();
    let (xi_t, xi_x, eta) = (rat(&xi_t), rat(&xi_x), rat(&eta));
    let q = VectorField::new(
        "Q",
        [
            (t(), xi_t.clone()),
            (x(), xi_x.clone()),
            (Symbol::dep("u"), eta.clone()),
        ],
    )
    .unwrap();
    let p = Prolongation::new(&q, &space);
    let names = [t().name().clone(), x().name().clone()];
    let xis = [xi_t, xi_x];
    // eta^{alpha+j} = D_j eta^alpha - sum_i (D_j xi^i) u_{alpha+i}
    let mut layer = vec![(MultiIndex::zero(2), eta)];
    for _ in 0..order {
        let mut next = Vec::new();
        for (alpha, coef) in &layer {
            for (j, xj) in names.iter().enumerate() {
                let mut v = total_derivative_rat(coef, xj);
                for (i, xi) in xis.iter().enumerate() {
                    let u = RatFn::symbol(Symbol::Jet(space.coord(0, &alpha.raised(i))));
                    v = v.sub(&total_derivative_rat(xi, xj).mul(&u));
                }
                let beta = alpha.raised(j);
                assert_same(&p.coefficient(&space.coord(0, &beta)), &v)?;
                next.push((beta, v));
            }
        }
        next.sort_by(|a, b| a.0.cmp(&b.0));
        next.dedup_by(|a, b| a.0 == b.0);
        layer = next;
    }
    Ok(())
}
