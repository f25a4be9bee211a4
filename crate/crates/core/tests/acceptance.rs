//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::TestRunner;
use symcheck::catalog::{
    algebra, class2_ansatz, class3_ansatz, euler_ansatz, euler_operator, family_ansatz, fluid_context, lhe_context,
    mixing_closure, polar_context, qtilde1, qtilde2, verify_paper, Scope, MIXINGS,
};
use symcheck::expr::parse::Context;
use symcheck::expr::{derive, substitute_symbols, ConstraintSet, Partial, RatFn, Symbol, DEFAULT_SEED};
use symcheck::invariance::qcond_check;
use symcheck::reduction::{phi_family, verify_reduction, PhiFamily};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rat(ctx: &Context, s: &str) -> RatFn {
    RatFn::from_expr(&ctx.parse_expr(s).unwrap()).unwrap()
}

fn lie_suite() -> Outcome {
    let start = Instant::now();
    let mut report = verify_paper(Scope::Lie, DEFAULT_SEED);
    report
        .checks
        .extend(verify_paper(Scope::Theorem3Lie, DEFAULT_SEED).checks);
    let elapsed = start.elapsed();
    for c in &report.checks {
        ensure(c.passed(), format!("{} is {}", c.check, c.verdict))?;
    }
    for n in 1..=3 {
        let ctx = lhe_context(n);
        let gens = algebra(&format!("lhe:n={n}")).unwrap();
        let pi = gens
            .iter()
            .find(|g| g.field.name == "Pi")
            .ok_or("no projective generator")?;
        ensure(
            pi.field.xi("t") == rat(&ctx, "4*t^2"),
            "projective generator lacks 4t^2 d/dt",
        )?;
        let id = format!("lie:lhe:n={n}:f");
        ensure(report.checks.iter().any(|c| c.check == id), format!("{id} missing"))?;
    }
    for prefix in ["lie:euler:", "thm3:lie:ns:"] {
        ensure(
            report.checks.iter().any(|c| c.check.starts_with(prefix)),
            format!("no {prefix} checks"),
        )?;
    }
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("{} generators in {elapsed:.2?}", report.checks.len()))
}

fn theorem1() -> Outcome {
    for n in 2..=3 {
        for op in [qtilde1(n).unwrap(), qtilde2(n).unwrap()] {
            let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
            ensure(r.is_invariant(), format!("{}: {r}", op.id))?;
        }
        let op = qtilde1(n).unwrap();
        let free = qcond_check(&op.system, &op.family, &ConstraintSet::new(), &op.chart, DEFAULT_SEED).unwrap();
        ensure(!free.is_invariant(), format!("{} passes without its constraint", op.id))?;
        let ctx = lhe_context(n).params(&["s"]);
        let xn = format!("x{n}");
        let shifted = ConstraintSet::new()
            .with_equation(
                &ctx.parse_expr("g_t").unwrap(),
                &ctx.parse_expr(&format!("g_{{{xn} {xn}}} + s")).unwrap(),
            )
            .unwrap();
        let s = Symbol::param("s");
        let zero: BTreeMap<Symbol, RatFn> = [(s.clone(), RatFn::zero())].into();
        for res in free.nonzero() {
            let v = shifted.apply(&res.value).unwrap();
            ensure(
                substitute_symbols(&v, &zero).unwrap().is_zero(),
                "residual survives g_t = g_nn",
            )?;
            ensure(
                derive(&derive(&v, &Partial(s.clone())), &Partial(s.clone())).is_zero(),
                "residual not linear in g_t - g_nn",
            )?;
        }
    }
    Ok("Qtilde1 and Qtilde2 for n = 2, 3; dropping g_t = g_nn leaves a residual proportional to g_t - g_nn".into())
}

fn phi_families() -> Outcome {
    let ctx = polar_context(2);
    let kappa = rat(&ctx, "kappa");
    let printed = [
        (PhiFamily::A, "kappa^2"),
        (PhiFamily::B, "-kappa^2"),
        (PhiFamily::C, "-kappa^2"),
        (PhiFamily::D, "0"),
    ];
    for (f, lambda) in printed {
        let sol = phi_family(f, &kappa).map_err(|e| e.to_string())?;
        ensure(
            sol.lambda == rat(&ctx, lambda),
            format!("family {}: lambda = {}", f.id(), sol.lambda),
        )?;
        ensure(sol.certificates.len() == 3, "missing certificate")?;
    }
    Ok("three exact identities for each of a, b, c, d; lambda = kappa^2, -kappa^2, -kappa^2, 0".into())
}

fn polar_expected(ctx: &Context, n: usize, lambda: &str) -> RatFn {
    let rest: String = (3..=n).map(|a| format!(" - v_{{x{a} x{a}}}")).collect();
    rat(ctx, &format!("v_t - v_{{r r}} - v_r/r + ({lambda})*v/r^2{rest}"))
}

fn reductions() -> Outcome {
    let mut count = 0;
    for n in 2..=3 {
        let case = class2_ansatz(n).unwrap();
        let omega: Vec<String> = std::iter::once("t".to_string())
            .chain((1..n).map(|a| format!("x{a}")))
            .collect();
        let refs: Vec<&str> = omega.iter().map(String::as_str).collect();
        let ctx = lhe_context(n).ufn("v", &refs);
        let rest: String = (1..n).map(|a| format!(" - v_{{x{a} x{a}}}")).collect();
        ensure(
            verify_reduction(&case.system, &case.ansatz, &[rat(&ctx, &format!("v_t{rest}"))]).unwrap(),
            format!("class 2, n = {n}"),
        )?;
        let ctx = polar_context(n);
        let case = class3_ansatz(n).unwrap();
        ensure(
            verify_reduction(&case.system, &case.ansatz, &[polar_expected(&ctx, n, "lambda")]).unwrap(),
            format!("class 3, n = {n}"),
        )?;
        count += 2;
        for (f, lambda) in [
            (PhiFamily::A, "kappa^2"),
            (PhiFamily::B, "-kappa^2"),
            (PhiFamily::C, "-kappa^2"),
            (PhiFamily::D, "0"),
        ] {
            let case = family_ansatz(n, f, &rat(&ctx, "kappa")).unwrap();
            let ok = verify_reduction(&case.system, &case.ansatz, &[polar_expected(&ctx, n, lambda)]).unwrap();
            ensure(ok, format!("family {}, n = {n}", f.id()))?;
            count += 1;
        }
    }
    let case = euler_ansatz().unwrap();
    let ctx = Context::new()
        .indeps(&["t", "x1", "x2", "x3"])
        .ufn("chi", &["t"])
        .ufn("v1", &["t", "x1", "x2"])
        .ufn("v2", &["t", "x1", "x2"])
        .ufn("v3", &["t", "x1", "x2"])
        .ufn("q", &["t", "x1", "x2"]);
    let want: Vec<RatFn> = [
        "v1_t + v1*v1_x1 + v2*v1_x2 + q_x1",
        "v2_t + v1*v2_x1 + v2*v2_x2 + q_x2",
        "v3_t + v1*v3_x1 + v2*v3_x2 + v3^2 + chi",
        "v1_x1 + v2_x2 + v3",
    ]
    .iter()
    .map(|s| rat(&ctx, s))
    .collect();
    ensure(
        verify_reduction(&case.system, &case.ansatz, &want).unwrap(),
        "Euler reduction",
    )?;
    Ok(format!("{} heat reductions and the Euler reduction", count))
}

fn theorem2() -> Outcome {
    let op = euler_operator().unwrap();
    let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
    ensure(r.is_invariant(), format!("{r}"))?;
    let ctx = fluid_context();
    let only_x3 = ConstraintSet::new()
        .with_equation(
            &ctx.parse_expr("zeta_x3").unwrap(),
            &ctx.parse_expr("-zeta*zeta_u3").unwrap(),
        )
        .unwrap();
    let r = qcond_check(&op.system, &op.family, &only_x3, &op.chart, DEFAULT_SEED).unwrap();
    ensure(!r.is_invariant(), "passes without the zeta_t condition")?;
    Ok("passes with both zeta conditions, fails without zeta_t".into())
}

fn lemmas() -> Outcome {
    ensure(MIXINGS >= 20, "fewer than 20 mixings")?;
    let report = verify_paper(Scope::Lemmas, DEFAULT_SEED);
    for c in &report.checks {
        ensure(c.passed(), format!("{} is {}", c.check, c.verdict))?;
    }
    let mut runner = TestRunner::new(common::config(24));
    let ops = [
        qtilde1(2).unwrap(),
        qtilde1(3).unwrap(),
        qtilde2(3).unwrap(),
        euler_operator().unwrap(),
    ];
    runner
        .run(&any::<u64>(), |seed| {
            for op in &ops {
                let r = mixing_closure(op, seed, 0).unwrap();
                prop_assert!(r.is_invariant(), "{}: {}", op.id, r);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{} closure checks plus 24 random mixings", report.checks.len()))
}

fn kernel() -> Outcome {
    use common::*;
    let start = Instant::now();
    let run = |name: &str, f: &dyn Fn(&mut TestRunner) -> Result<(), String>| -> Result<(), String> {
        let mut runner = TestRunner::new(config(CASES));
        f(&mut runner).map_err(|e| format!("{name}: {e}"))
    };
    run("normalize", &|r| {
        r.run(&expr(true), normalize_is_idempotent).map_err(|e| e.to_string())
    })?;
    run("linearity", &|r| {
        r.run(&(expr(true), expr(true), -5i64..=5, 1i64..=5), |(a, b, p, q)| {
            derivative_is_linear(a, b, p, q)
        })
        .map_err(|e| e.to_string())
    })?;
    run("clairaut", &|r| {
        r.run(&expr(true), mixed_partials_commute).map_err(|e| e.to_string())
    })?;
    run("total derivatives", &|r| {
        r.run(&expr(true), total_derivatives_commute).map_err(|e| e.to_string())
    })?;
    run("prolongation", &|r| {
        let s = tree(false, 2, 6, false);
        r.run(&(s.clone(), s.clone(), s), |(a, b, c)| check_prolongation([a, b, c], 3))
            .map_err(|e| e.to_string())
    })?;
    Ok(format!("5 properties x {CASES} cases in {:.1?}", start.elapsed()))
}

fn determinism() -> Outcome {
    let run = || {
        let start = Instant::now();
        let o = Command::new(env!("CARGO_BIN_EXE_symcheck"))
            .args(["paper-verify", "all", "--json"])
            .env_remove("SYMSEED")
            .output()
            .map_err(|e| e.to_string())?;
        Ok::<_, String>((o, start.elapsed()))
    };
    let (a, ta) = run()?;
    let (b, tb) = run()?;
    ensure(a.status.code() == Some(0), format!("exit {:?}", a.status.code()))?;
    ensure(a.stdout == b.stdout, "outputs differ")?;
    let slowest = ta.max(tb);
    ensure(slowest < Duration::from_secs(300), format!("took {slowest:?}"))?;
    Ok(format!("{} identical bytes, {slowest:.2?} per run", a.stdout.len()))
}

fn out_of_scope() -> Outcome {
    let report = verify_paper(Scope::All, DEFAULT_SEED);
    let marks: Vec<&String> = report
        .not_verified
        .iter()
        .filter(|s| s.contains("cited, not verified"))
        .collect();
    for system in ["heat", "Euler", "Navier-Stokes"] {
        ensure(
            marks.iter().any(|s| s.contains(system)),
            format!("no completeness mark for {system}"),
        )?;
    }
    ensure(
        report.to_json().contains("cited, not verified"),
        "marks missing from JSON",
    )?;
    Ok(format!("{} completeness statements marked", marks.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("Lie suite", lie_suite),
        ("heat conditional operators", theorem1),
        ("phi families", phi_families),
        ("reductions", reductions),
        ("Euler conditional operator", theorem2),
        ("lemma closures", lemmas),
        ("kernel properties", kernel),
        ("determinism", determinism),
        ("out-of-scope acknowledgment", out_of_scope),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
