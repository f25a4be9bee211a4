use super::*;
use crate::expr::parse::Context;
use crate::expr::{name, Expr};
use std::sync::Arc;

fn ctx() -> Context {
    Context::new()
        .indeps(&["t", "x1", "x2", "x3"])
        .deps(&["u", "u3"])
        .params(&["eps"])
        .ufn("zeta", &["t", "x3", "u3"])
}

fn op(src: &str) -> VectorField {
    VectorField::new(src, ctx().parse_operator(src).unwrap()).unwrap()
}

fn rat(src: &str) -> RatFn {
    RatFn::from_expr(&ctx().parse_expr(src).unwrap()).unwrap()
}

fn indeps() -> Vec<Name> {
    ["t", "x1", "x2", "x3"].iter().map(|s| name(s)).collect()
}

fn space() -> JetSpace {
    JetSpace::new(&["t", "x1"], &["u"], 2).unwrap()
}

fn same_field(a: &VectorField, b: &VectorField) -> bool {
    a.sub(b).coeffs().all(|(_, c)| c.is_zero())
}

#[test]
fn translation_prolongs_trivially() {
    let p = prolong(&op("d/dt"), 2, &space());
    assert!(p.values().all(RatFn::is_zero));
}

#[test]
fn galilei_first_prolongation() {
    let g = op("t*d/dx1 - x1*u/2*d/du");
    let s = space();
    let p = Prolongation::new(&g, &s);
    let got = p.coefficient(&JetCoord::with_derivs("u", ["t"]));
    assert!(got.sub(&rat("-x1*u_t/2 - u_x1")).is_zero());
}

#[test]
fn scaling_prolongs_to_jets() {
    let p = prolong(&op("u*d/du"), 3, &space());
    for (c, v) in p {
        assert_eq!(v, RatFn::symbol(Symbol::Jet(c)));
    }
}

#[test]
fn commutators_of_heat_generators() {
    assert!(commutator(&op("d/dx1"), &op("d/dx2")).is_zero());
    let dt = op("d/dt");
    let d = op("2*t*d/dt + x1*d/dx1 + x2*d/dx2");
    assert!(same_field(&commutator(&d, &dt), &op("-2*d/dt")));
    let g = op("t*d/dx1 - x1*u/2*d/du");
    assert!(same_field(&commutator(&dt, &g), &op("d/dx1")));
}

#[test]
fn involutivity() {
    let f = OperatorFamily::new("f", vec![op("d/dx1"), op("d/dx2")]);
    let z = is_involutive(&f, &indeps(), &ConstraintSet::new()).unwrap().unwrap();
    assert!(z.values().flatten().all(RatFn::is_zero));
    let bad = OperatorFamily::new("g", vec![op("d/dt + u*d/du"), op("x1*d/dt + x1*u*d/du")]);
    assert!(matches!(
        is_involutive(&bad, &indeps(), &ConstraintSet::new()),
        Err(Error::Rank(_))
    ));
    let j = OperatorFamily::new("j", vec![op("x1*d/dx2 - x2*d/dx1"), op("d/dx3")]);
    let z = is_involutive(&j, &indeps(), &ConstraintSet::new()).unwrap().unwrap();
    assert!(z.values().flatten().all(RatFn::is_zero));
}

#[test]
fn non_involutive_pair() {
    let f = OperatorFamily::new("f", vec![op("d/dx1"), op("x1*d/dx2 + d/dx3")]);
    assert!(is_involutive(&f, &indeps(), &ConstraintSet::new()).unwrap().is_none());
}

#[test]
fn family_equivalence() {
    let c = ConstraintSet::new();
    let one = |s: &str| OperatorFamily::single(op(s));
    assert!(equivalent_families(&one("d/dx1"), &one("(1 + u^2)*d/dx1"), &indeps(), &c).unwrap());
    assert!(!equivalent_families(&one("d/dx1"), &one("d/dx2"), &indeps(), &c).unwrap());
    let f = OperatorFamily::new("f", vec![op("d/dx1"), op("d/dx2")]);
    let g = OperatorFamily::new("g", vec![op("d/dx1 + d/dx2"), op("d/dx1 - d/dx2")]);
    assert!(equivalent_families(&f, &g, &indeps(), &c).unwrap());
}

#[test]
fn canonical_forms() {
    let chart = Chart::new();
    let c = canonicalize(&OperatorFamily::single(op("2*d/dx1")), &indeps(), &chart).unwrap();
    assert!(same_field(&c.family.members[0], &op("d/dx1")));

    let chart = Chart::new().nonvanishing(&Expr::indep("x3")).unwrap();
    let f = OperatorFamily::single(op("x3*d/dx3 + x3*zeta*d/du3"));
    let c = canonicalize(&f, &indeps(), &chart).unwrap();
    assert!(same_field(&c.family.members[0], &op("d/dx3 + zeta*d/du3")));

    let f = OperatorFamily::single(op("(t + 1)*d/dx3 - x3*u/2*d/du"));
    assert!(matches!(
        canonicalize(&f, &indeps(), &Chart::new()),
        Err(Error::Chart(_))
    ));
    let chart = Chart::new().nonvanishing(&ctx().parse_expr("t + 1").unwrap()).unwrap();
    let c = canonicalize(&f, &indeps(), &chart).unwrap();
    assert!(same_field(&c.family.members[0], &op("d/dx3 - x3*u/(2*(t + 1))*d/du")));
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<Symbol, RatFn> {
    let c = ctx();
    pairs
        .iter()
        .map(|(k, v)| {
            let s = c.parse_expr(k).unwrap().as_symbol().unwrap().clone();
            (s, rat(v))
        })
        .collect()
}

#[test]
fn pushforward_examples() {
    let tr = PointTransformation::new("tr", map(&[("t", "t + 3")]), Some(map(&[("t", "t - 3")])));
    assert!(tr.check_inverse().unwrap());
    assert!(same_field(&pushforward(&tr, &op("d/dt")).unwrap(), &op("d/dt")));

    let rot = PointTransformation::new(
        "rot",
        map(&[("x1", "x1*cos(eps) - x2*sin(eps)"), ("x2", "x1*sin(eps) + x2*cos(eps)")]),
        Some(map(&[
            ("x1", "x1*cos(eps) + x2*sin(eps)"),
            ("x2", "-x1*sin(eps) + x2*cos(eps)"),
        ])),
    );
    assert!(rot.check_inverse().unwrap());
    let got = pushforward(&rot, &op("d/dx1")).unwrap();
    assert!(same_field(&got, &op("cos(eps)*d/dx1 + sin(eps)*d/dx2")));

    let sc = PointTransformation::new(
        "scale",
        map(&[("t", "exp(2*eps)*t"), ("x1", "exp(eps)*x1")]),
        Some(map(&[("t", "exp(-2*eps)*t"), ("x1", "exp(-eps)*x1")])),
    );
    let got = pushforward(&sc, &op("d/dt")).unwrap();
    assert!(same_field(&got, &op("exp(2*eps)*d/dt")));
}

#[test]
fn pushforward_respects_commutators() {
    let rot = PointTransformation::new(
        "rot",
        map(&[("x1", "x1*cos(eps) - x2*sin(eps)"), ("x2", "x1*sin(eps) + x2*cos(eps)")]),
        Some(map(&[
            ("x1", "x1*cos(eps) + x2*sin(eps)"),
            ("x2", "-x1*sin(eps) + x2*cos(eps)"),
        ])),
    );
    let q = op("t*d/dx1 - x1*u/2*d/du");
    let p = op("2*t*d/dt + x1*d/dx1 + x2*d/dx2");
    let lhs = pushforward(&rot, &commutator(&q, &p)).unwrap();
    let rhs = commutator(&pushforward(&rot, &q).unwrap(), &pushforward(&rot, &p).unwrap());
    assert!(same_field(&lhs, &rhs));
}

fn with_flow(
    v: VectorField,
    f: impl Fn(&RatFn) -> Result<BTreeMap<Symbol, RatFn>> + Send + Sync + 'static,
) -> VectorField {
    v.with_flow(Arc::new(f))
}

#[test]
fn stored_flows_are_checked() {
    let dt = with_flow(op("d/dt"), |e| {
        Ok(map(&[("t", "t")]).into_iter().map(|(k, v)| (k, v.add(e))).collect())
    });
    let g = flow(&dt, &RatFn::int(2)).unwrap();
    assert_eq!(g.image(&Symbol::indep("t")), rat("t + 2"));
    assert!(g.check_inverse().unwrap());

    let d = with_flow(op("2*t*d/dt + x1*d/dx1"), |e| {
        let ex = |k: i64| crate::expr::canon::make_fn(crate::expr::ElemFn::Exp, &e.scale(&crate::expr::coeff(k)));
        Ok(map(&[("t", "t"), ("x1", "x1")])
            .into_iter()
            .map(|(k, v)| {
                let f = if k == Symbol::indep("t") { ex(2) } else { ex(1) };
                (k, v.mul(&f.unwrap()))
            })
            .collect())
    });
    let g = flow(&d, &rat("eps")).unwrap();
    assert!(g.check_inverse().unwrap());

    let wrong = with_flow(op("u*d/du"), |e| {
        Ok(map(&[("u", "u")]).into_iter().map(|(k, v)| (k, v.add(e))).collect())
    });
    assert!(matches!(flow(&wrong, &rat("eps")), Err(Error::Certification(_))));
    assert!(matches!(flow(&op("d/dt"), &rat("eps")), Err(Error::NoFlow(_))));
}

#[test]
fn equivalence_modulo_transformations() {
    let c = ConstraintSet::new();
    let quarter = PointTransformation::new(
        "rot90",
        map(&[("x1", "-x2"), ("x2", "x1")]),
        Some(map(&[("x1", "x2"), ("x2", "-x1")])),
    );
    let q = OperatorFamily::single(op("d/dx1"));
    let qt = OperatorFamily::single(op("d/dx2"));
    assert!(equivalent_mod_group(&q, &qt, &quarter, &indeps(), &c).unwrap());
    let dt = OperatorFamily::single(op("d/dt"));
    assert!(equivalent_mod_group(&dt, &dt, &PointTransformation::identity(), &indeps(), &c).unwrap());
}
