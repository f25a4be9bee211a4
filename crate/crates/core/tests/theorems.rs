use std::collections::BTreeMap;

use symcheck::catalog::{
    class2_ansatz, class3_ansatz, euler_ansatz, euler_operator, family_ansatz, lhe, lhe_context, pi_literal,
    polar_context, qtilde1, qtilde2,
};
use symcheck::expr::parse::Context;
use symcheck::expr::{derive, substitute_symbols, ConstraintSet, Partial, RatFn, Symbol, DEFAULT_SEED};
use symcheck::invariance::{lie_check, qcond_check};
use symcheck::reduction::{apply_ansatz, phi_family, verify_reduction, PhiFamily};
use symcheck::symmetry::VectorField;

fn rat(ctx: &Context, s: &str) -> RatFn {
    RatFn::from_expr(&ctx.parse_expr(s).unwrap()).unwrap()
}

fn field(ctx: &Context, name: &str, s: &str) -> VectorField {
    VectorField::new(name, ctx.parse_operator(s).unwrap()).unwrap()
}

fn xs(n: usize) -> Vec<String> {
    (1..=n).map(|a| format!("x{a}")).collect()
}

#[test]
fn qtilde1_is_conditionally_invariant() {
    for n in 2..=3 {
        let op = qtilde1(n).unwrap();
        let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
        assert!(r.is_invariant(), "n = {n}: {r}");
    }
}

#[test]
fn qtilde1_without_its_constraint_fails_by_the_heat_residual_of_g() {
    for n in 2..=3 {
        let op = qtilde1(n).unwrap();
        let r = qcond_check(&op.system, &op.family, &ConstraintSet::new(), &op.chart, DEFAULT_SEED).unwrap();
        assert!(!r.is_invariant(), "n = {n}");
        // With g_t = g_nn + s every residual must become s times a nonzero factor.
        let ctx = lhe_context(n).params(&["s"]);
        let xn = format!("x{n}");
        let shifted = ConstraintSet::new()
            .with_equation(
                &ctx.parse_expr("g_t").unwrap(),
                &ctx.parse_expr(&format!("g_{{{xn} {xn}}} + s")).unwrap(),
            )
            .unwrap();
        let s = Symbol::param("s");
        let mut zero_s = BTreeMap::new();
        zero_s.insert(s.clone(), RatFn::zero());
        let mut nonzero = 0;
        for res in r.nonzero() {
            let v = shifted.apply(&res.value).unwrap();
            assert!(substitute_symbols(&v, &zero_s).unwrap().is_zero(), "{}: {v}", res.label);
            let dv = derive(&v, &Partial(s.clone()));
            assert!(derive(&dv, &Partial(s.clone())).is_zero(), "not linear in s: {v}");
            if !dv.is_zero() {
                nonzero += 1;
            }
        }
        assert!(nonzero > 0);
    }
}

#[test]
fn qtilde2_is_conditionally_invariant_in_polar_coordinates() {
    for n in 2..=3 {
        let op = qtilde2(n).unwrap();
        let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
        assert!(r.is_invariant(), "n = {n}: {r}");
        let free = qcond_check(&op.system, &op.family, &ConstraintSet::new(), &op.chart, DEFAULT_SEED).unwrap();
        assert!(!free.is_invariant(), "n = {n}");
    }
}

#[test]
fn projective_generator_needs_its_time_component() {
    for n in 1..=3 {
        let sys = lhe(n).unwrap();
        let ctx = lhe_context(n);
        let x = xs(n);
        let sq = x.iter().map(|a| format!("{a}^2")).collect::<Vec<_>>().join(" + ");
        let mut src = vec!["4*t^2*d/dt".to_string()];
        src.extend(x.iter().map(|a| format!("4*t*{a}*d/d{a}")));
        src.push(format!("-({sq} + 2*{n}*t)*u*d/du"));
        let pi = field(&ctx, "Pi", &src.join(" + "));
        assert!(
            lie_check(&sys, &pi, &ConstraintSet::new(), DEFAULT_SEED)
                .unwrap()
                .is_invariant(),
            "n = {n}"
        );
        let printed = pi_literal(n).unwrap();
        assert!(
            !lie_check(&sys, &printed, &ConstraintSet::new(), DEFAULT_SEED)
                .unwrap()
                .is_invariant(),
            "n = {n}"
        );
    }
}

#[test]
fn euler_operator_needs_both_zeta_conditions() {
    let op = euler_operator().unwrap();
    let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
    assert!(r.is_invariant(), "{r}");
    let ctx = symcheck::catalog::fluid_context();
    let only_x3 = ConstraintSet::new()
        .with_equation(
            &ctx.parse_expr("zeta_x3").unwrap(),
            &ctx.parse_expr("-zeta*zeta_u3").unwrap(),
        )
        .unwrap();
    let r = qcond_check(&op.system, &op.family, &only_x3, &op.chart, DEFAULT_SEED).unwrap();
    assert!(!r.is_invariant());
}

/// Closed forms and `lambda` for each family, in floating point.
fn family_numeric(f: PhiFamily, k: f64, th: f64) -> (f64, f64, f64) {
    match f {
        PhiFamily::A => (-k * (k * th).tan(), (k * th).cos(), k * k),
        PhiFamily::B => (k * (k * th).tanh(), (k * th).cosh(), -k * k),
        PhiFamily::C => (k / (k * th).tanh(), (k * th).sinh(), -k * k),
        PhiFamily::D => (1.0 / th, th, 0.0),
    }
}

#[test]
fn phi_families_solve_the_angular_equation_numerically() {
    let h = 1e-4;
    for f in PhiFamily::ALL {
        for (k, th) in [(0.7, 0.3), (1.3, 0.4), (0.5, 1.1)] {
            let phi = |t: f64| family_numeric(f, k, t).0;
            let big = |t: f64| family_numeric(f, k, t).1;
            let lambda = family_numeric(f, k, th).2;
            let d1 = (phi(th + h / 10.0) - phi(th - h / 10.0)) / (h / 5.0);
            let d2 = (phi(th + h) - 2.0 * phi(th) + phi(th - h)) / (h * h);
            let big_d = (big(th + h / 10.0) - big(th - h / 10.0)) / (h / 5.0);
            let scale = 1.0 + d2.abs();
            assert!((d2 + 2.0 * phi(th) * d1).abs() < 1e-5 * scale, "{f:?}");
            assert!((big_d - phi(th) * big(th)).abs() < 1e-6, "{f:?}");
            assert!((lambda + d1 + phi(th) * phi(th)).abs() < 1e-6, "{f:?}");
        }
    }
}

#[test]
fn phi_families_match_their_closed_forms() {
    let ctx = polar_context(2);
    let kappa = rat(&ctx, "kappa");
    let expected = [
        (PhiFamily::A, "-kappa*tan(kappa*theta)", "kappa^2", "cos(kappa*theta)"),
        (PhiFamily::B, "kappa*tanh(kappa*theta)", "-kappa^2", "cosh(kappa*theta)"),
        (PhiFamily::C, "kappa*coth(kappa*theta)", "-kappa^2", "sinh(kappa*theta)"),
        (PhiFamily::D, "1/theta", "0", "theta"),
    ];
    for (f, phi, lambda, factor) in expected {
        let sol = phi_family(f, &kappa).unwrap();
        assert_eq!(sol.phi, rat(&ctx, phi), "{f:?}");
        assert_eq!(sol.lambda, rat(&ctx, lambda), "{f:?}");
        assert_eq!(sol.factor, rat(&ctx, factor), "{f:?}");
        assert_eq!(sol.certificates.len(), 3);
        for k in ["2", "1/3", "-5/2"] {
            assert!(phi_family(f, &rat(&ctx, k)).is_ok(), "{f:?} kappa = {k}");
        }
    }
}

fn polar_expected(ctx: &Context, n: usize, lambda: &str) -> RatFn {
    let rest: String = (3..=n).map(|a| format!(" - v_{{x{a} x{a}}}")).collect();
    rat(ctx, &format!("v_t - v_{{r r}} - v_r/r + ({lambda})*v/r^2{rest}"))
}

#[test]
fn separated_class_reduces_to_a_lower_heat_equation() {
    for n in 2..=3 {
        let case = class2_ansatz(n).unwrap();
        let omega: Vec<String> = std::iter::once("t".to_string()).chain(xs(n - 1)).collect();
        let refs: Vec<&str> = omega.iter().map(String::as_str).collect();
        let ctx = lhe_context(n).ufn("v", &refs);
        let rest: String = xs(n - 1).iter().map(|a| format!(" - v_{{{a} {a}}}")).collect();
        let want = rat(&ctx, &format!("v_t{rest}"));
        assert!(
            verify_reduction(&case.system, &case.ansatz, &[want]).unwrap(),
            "n = {n}"
        );
        let wrong = rat(&ctx, "v_t");
        assert!(
            !verify_reduction(&case.system, &case.ansatz, &[wrong]).unwrap(),
            "n = {n}"
        );
    }
}

#[test]
fn angular_class_reduces_with_lambda() {
    for n in 2..=3 {
        let ctx = polar_context(n);
        let case = class3_ansatz(n).unwrap();
        assert!(verify_reduction(&case.system, &case.ansatz, &[polar_expected(&ctx, n, "lambda")]).unwrap());
        assert!(!verify_reduction(&case.system, &case.ansatz, &[polar_expected(&ctx, n, "-lambda")]).unwrap());
        let lambdas = [
            (PhiFamily::A, "kappa^2"),
            (PhiFamily::B, "-kappa^2"),
            (PhiFamily::C, "-kappa^2"),
            (PhiFamily::D, "0"),
        ];
        for (f, lambda) in lambdas {
            let case = family_ansatz(n, f, &rat(&ctx, "kappa")).unwrap();
            let want = polar_expected(&ctx, n, lambda);
            assert!(
                verify_reduction(&case.system, &case.ansatz, &[want]).unwrap(),
                "{f:?}, n = {n}"
            );
        }
        let case = family_ansatz(n, PhiFamily::A, &rat(&ctx, "3/2")).unwrap();
        assert!(verify_reduction(&case.system, &case.ansatz, &[polar_expected(&ctx, n, "9/4")]).unwrap());
    }
}

#[test]
fn euler_ansatz_reproduces_the_reduced_system() {
    let case = euler_ansatz().unwrap();
    let omega = ["t", "x1", "x2"];
    let ctx = Context::new()
        .indeps(&["t", "x1", "x2", "x3", "w"])
        .ufn("chi", &["t"])
        .ufn("v1", &omega)
        .ufn("v2", &omega)
        .ufn("v3", &omega)
        .ufn("q", &omega);
    let want: Vec<RatFn> = [
        "v1_t + v1*v1_x1 + v2*v1_x2 + q_x1",
        "v2_t + v1*v2_x1 + v2*v2_x2 + q_x2",
        "v3_t + v1*v3_x1 + v2*v3_x2 + v3^2 + chi",
        "v1_x1 + v2_x2 + v3",
    ]
    .iter()
    .map(|s| rat(&ctx, s))
    .collect();
    assert!(verify_reduction(&case.system, &case.ansatz, &want).unwrap());
    let reduced = apply_ansatz(&case.system, &case.ansatz).unwrap();
    assert!(reduced.iter().all(|r| !r.equation.to_string().contains("x3")));
}
