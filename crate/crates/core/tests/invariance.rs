use std::time::{Duration, Instant};

use symcheck::catalog::{algebra, lhe, lhe_context, navier_stokes, system};
use symcheck::expr::{coeff, ConstraintSet, Poly, RatFn, DEFAULT_SEED};
use symcheck::invariance::{determining_system, lie_check, Mode, Verdict};
use symcheck::symmetry::{Chart, VectorField};

#[test]
fn every_listed_generator_is_a_lie_symmetry() {
    let start = Instant::now();
    let mut checked = 0;
    for (alg, sys) in [
        ("lhe:n=1", "lhe:n=1"),
        ("lhe:n=2", "lhe:n=2"),
        ("lhe:n=3", "lhe:n=3"),
        ("euler", "euler"),
        ("ns", "ns"),
    ] {
        let sys = system(sys).unwrap();
        for g in algebra(alg).unwrap() {
            let r = lie_check(&sys, &g.field, &g.constraints, DEFAULT_SEED).unwrap();
            assert!(r.is_invariant(), "{alg}: {r}");
            checked += 1;
        }
    }
    // dt, d_a, D, G_a, I, J_ab, Pi, f for the heat equation
    let heat = |n: usize| 2 * n + 5 + n * (n - 1) / 2;
    assert_eq!(checked, heat(1) + heat(2) + heat(3) + 8 + 7);
    assert!(start.elapsed() < Duration::from_secs(60));
}

#[test]
fn arbitrary_solution_generator_needs_its_constraint() {
    let sys = lhe(2).unwrap();
    let f = algebra("lhe:n=2")
        .unwrap()
        .into_iter()
        .find(|g| g.field.name == "f")
        .unwrap();
    assert!(!f.constraints.is_empty());
    let r = lie_check(&sys, &f.field, &ConstraintSet::new(), DEFAULT_SEED).unwrap();
    assert!(matches!(r.verdict, Verdict::NotInvariant { .. }));
}

#[test]
fn concrete_viscosity_keeps_the_algebra() {
    let sys = navier_stokes(Some(coeff(3))).unwrap();
    for g in algebra("ns").unwrap() {
        let r = lie_check(&sys, &g.field, &g.constraints, DEFAULT_SEED).unwrap();
        assert!(r.is_invariant(), "{r}");
    }
}

fn non_symmetries(ctx: &symcheck::expr::parse::Context) -> Vec<VectorField> {
    [
        "x1*d/dx1",
        "u^2*d/du",
        "t*d/dx1",
        "x1*d/dt",
        "d/dx1 + u*d/du + x2*d/dx2",
    ]
    .iter()
    .map(|s| VectorField::new(s, ctx.parse_operator(s).unwrap()).unwrap())
    .collect()
}

#[test]
fn determining_system_is_empty_exactly_for_symmetries() {
    let sys = lhe(2).unwrap();
    let ctx = lhe_context(2);
    for g in algebra("lhe:n=2").unwrap() {
        let eqs = determining_system(&sys, &g.field, Mode::Lie, &g.constraints, &Chart::new()).unwrap();
        assert!(eqs.is_empty(), "{}", g.field.name);
    }
    for q in non_symmetries(&ctx) {
        let eqs = determining_system(&sys, &q, Mode::Lie, &ConstraintSet::new(), &Chart::new()).unwrap();
        assert!(!eqs.is_empty(), "{}", q.name);
        assert!(!lie_check(&sys, &q, &ConstraintSet::new(), DEFAULT_SEED)
            .unwrap()
            .is_invariant());
    }
}

#[test]
fn determining_equations_reassemble_the_residual() {
    let sys = lhe(2).unwrap();
    let ctx = lhe_context(2);
    for q in non_symmetries(&ctx) {
        let eqs = determining_system(&sys, &q, Mode::Lie, &ConstraintSet::new(), &Chart::new()).unwrap();
        let mut total = RatFn::zero();
        for d in &eqs {
            total = total.add(
                &d.coefficient
                    .mul(&RatFn::from_poly(Poly::term(d.monomial.clone(), coeff(1)))),
            );
        }
        let r = lie_check(&sys, &q, &ConstraintSet::new(), DEFAULT_SEED).unwrap();
        let residual = r.residuals.iter().fold(RatFn::zero(), |acc, x| acc.add(&x.value));
        let ratio = total.div(&residual).unwrap();
        assert!(ratio.as_constant().is_some(), "{}: {total} vs {residual}", q.name);
    }
}
