use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{algebra, euler, fluid_context, lhe, lhe_context, lhe_polar, polar_context, rat, xs, Generator};
use crate::error::{Error, Result};
use crate::expr::parse::Context;
use crate::expr::{substitute_symbols, Coeff, ConstraintSet, RatFn, Symbol};
use crate::jet::PdeSystem;
use crate::reduction::{phi_family, Ansatz, PhiFamily};
use crate::symmetry::{Chart, OperatorFamily, VectorField};

/// A conditional operator family with the side conditions under which it
/// is claimed, and the generators whose flows must preserve it.
#[derive(Clone, Debug)]
pub struct TheoremOperator {
    pub id: String,
    pub paper_ref: String,
    pub system: PdeSystem,
    pub family: OperatorFamily,
    pub constraints: ConstraintSet,
    pub chart: Chart,
    pub closure: Vec<Generator>,
}

fn constraint(ctx: &Context, c: &mut ConstraintSet, lhs: &str, rhs: &str) -> Result<()> {
    c.add_equation(&ctx.parse_expr(lhs)?, &ctx.parse_expr(rhs)?)
}

fn chart(ctx: &Context, srcs: &[&str]) -> Result<Chart> {
    srcs.iter()
        .try_fold(Chart::new(), |c, s| c.nonvanishing(&ctx.parse_expr(s)?))
}

fn field(ctx: &Context, name: &str, src: &str) -> Result<VectorField> {
    VectorField::new(name, ctx.parse_operator(src)?)
}

/// `d/dx_n + g_{x_n}/g u d/du` with `g_t = g_{x_n x_n}`.
pub fn qtilde1(n: usize) -> Result<TheoremOperator> {
    let ctx = lhe_context(n);
    let x = format!("x{n}");
    let mut c = ConstraintSet::new();
    constraint(&ctx, &mut c, "g_t", &format!("g_{{{x} {x}}}"))?;
    Ok(TheoremOperator {
        id: format!("thm1:Qtilde1:n={n}"),
        paper_ref: format!("Q = d_{x} + (g_{x}/g) u d_u, g_t = g_{x}{x}"),
        system: lhe(n)?,
        family: OperatorFamily::single(field(&ctx, "Qtilde1", &format!("d/d{x} + g_{x}/g*u*d/du"))?),
        constraints: c,
        chart: chart(&ctx, &["g"])?,
        closure: algebra(&format!("lhe:n={n}"))?,
    })
}

/// `d/dtheta + phi u d/du` on the heat equation in polar coordinates with
/// `phi_{theta theta} = -2 phi phi_theta`.
pub fn qtilde2(n: usize) -> Result<TheoremOperator> {
    let ctx = polar_context(n);
    let mut c = ConstraintSet::new();
    constraint(&ctx, &mut c, "phi_{theta theta}", "-2*phi*phi_theta")?;
    Ok(TheoremOperator {
        id: format!("thm1:Qtilde2:n={n}"),
        paper_ref: "Q = d_theta + phi(theta) u d_u, phi'' + 2 phi phi' = 0 (polar chart)".into(),
        system: lhe_polar(n)?,
        family: OperatorFamily::single(field(&ctx, "Qtilde2", "d/dtheta + phi*u*d/du")?),
        constraints: c,
        chart: chart(&ctx, &["r"])?,
        closure: algebra(&format!("lhe:n={n}:polar"))?,
    })
}

/// Each generator of the heat algebra with a nonzero `xi`, taken as a
/// one-element family.
pub fn qtilde0(n: usize) -> Result<Vec<TheoremOperator>> {
    let ctx = lhe_context(n);
    let mut names = vec!["t".to_string()];
    names.extend(xs(n));
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let ch = chart(&ctx, &refs)?;
    let sys = lhe(n)?;
    let closure = algebra(&format!("lhe:n={n}"))?;
    let mut out = Vec::new();
    for g in &closure {
        if sys.space.indeps.iter().all(|x| g.field.xi(x).is_zero()) {
            continue;
        }
        out.push(TheoremOperator {
            id: format!("thm1:Qtilde0:n={n}:{}", g.field.name),
            paper_ref: format!("Lie generator {} of the heat algebra", g.field.name),
            system: sys.clone(),
            family: OperatorFamily::single(g.field.clone()),
            constraints: g.constraints.clone(),
            chart: ch.clone(),
            closure: closure.clone(),
        });
    }
    Ok(out)
}

/// The projective generator as printed, with the `d/dt` term missing and
/// the `u` weight `2t` for every `n`.
pub fn pi_literal(n: usize) -> Result<VectorField> {
    let ctx = lhe_context(n);
    let x = xs(n);
    let mut src: Vec<String> = x.iter().map(|a| format!("4*t*{a}*d/d{a}")).collect();
    let sq = x.iter().map(|a| format!("{a}^2")).collect::<Vec<_>>().join(" + ");
    src.push(format!("-({sq} + 2*t)*u*d/du"));
    field(&ctx, "Pi(printed)", &src.join(" + "))
}

/// `d/dx3 + zeta d/du3 + chi x3 d/dp` on the Euler equations.
pub fn euler_operator() -> Result<TheoremOperator> {
    let ctx = fluid_context();
    let mut c = ConstraintSet::new();
    constraint(&ctx, &mut c, "zeta_x3", "-zeta*zeta_u3")?;
    constraint(&ctx, &mut c, "zeta_t", "(u3*zeta + chi*x3)*zeta_u3 - zeta^2 - chi")?;
    Ok(TheoremOperator {
        id: "thm2:Qtilde".into(),
        paper_ref: "Q = d_3 + zeta d_u3 + chi x3 d_p, zeta_3 = -zeta zeta_u3, zeta_t = (u3 zeta + chi x3) zeta_u3 - zeta^2 - chi"
            .into(),
        system: euler()?,
        family: OperatorFamily::single(field(&ctx, "Qtilde", "d/dx3 + zeta*d/du3 + chi*x3*d/dp")?),
        constraints: c,
        chart: Chart::new(),
        closure: algebra("euler")?,
    })
}

/// An ansatz with the reduced system it must produce.
#[derive(Clone, Debug)]
pub struct ReductionCase {
    pub id: String,
    pub paper_ref: String,
    pub system: PdeSystem,
    pub ansatz: Ansatz,
    pub expected: Vec<RatFn>,
}

fn laplacian_rest(vars: &[String], f: &str) -> String {
    vars.iter().map(|x| format!(" - {f}_{{{x} {x}}}")).collect()
}

/// `u = g(t, x_n) v(t, x_1, ..., x_{n-1})`.
pub fn class2_ansatz(n: usize) -> Result<ReductionCase> {
    if n < 2 {
        return Err(Error::Invalid("the separated ansatz needs n >= 2".into()));
    }
    let x = xs(n);
    let mut omega = vec!["t".to_string()];
    omega.extend(x[..n - 1].iter().cloned());
    let refs: Vec<&str> = omega.iter().map(String::as_str).collect();
    let ctx = lhe_context(n).ufn("v", &refs);
    let mut c = ConstraintSet::new();
    let xn = &x[n - 1];
    constraint(&ctx, &mut c, "g_t", &format!("g_{{{xn} {xn}}}"))?;
    let ansatz = Ansatz::new("class2", &refs, &["v"])
        .set("u", rat(&ctx, "g*v")?)
        .with_constraints(c)
        .with_chart(chart(&ctx, &["g"])?);
    Ok(ReductionCase {
        id: format!("thm1:class2:n={n}"),
        paper_ref: format!("u = g(t, x{n}) v, v_t = v_ii over the remaining variables"),
        system: lhe(n)?,
        ansatz,
        expected: vec![rat(&ctx, &format!("v_t{}", laplacian_rest(&x[..n - 1], "v")))?],
    })
}

fn polar_omega(n: usize) -> Vec<String> {
    let mut v = vec!["t".to_string(), "r".to_string()];
    v.extend((3..=n).map(|a| format!("x{a}")));
    v
}

fn polar_reduced(ctx: &Context, n: usize, lambda: &RatFn) -> Result<RatFn> {
    let rest: Vec<String> = (3..=n).map(|a| format!("x{a}")).collect();
    let e = rat(
        ctx,
        &format!("v_t - v_{{r r}} - v_r/r + lambda*v/r^2{}", laplacian_rest(&rest, "v")),
    )?;
    let mut m = BTreeMap::new();
    m.insert(Symbol::param("lambda"), lambda.clone());
    substitute_symbols(&e, &m)
}

/// `u = Phi(theta) v(t, r, x_3, ...)` with `Phi_theta = phi Phi` and
/// `phi_theta = -lambda - phi^2`.
pub fn class3_ansatz(n: usize) -> Result<ReductionCase> {
    let ctx = polar_context(n);
    let omega = polar_omega(n);
    let refs: Vec<&str> = omega.iter().map(String::as_str).collect();
    let mut c = ConstraintSet::new();
    constraint(&ctx, &mut c, "Phi_theta", "phi*Phi")?;
    constraint(&ctx, &mut c, "phi_theta", "-lambda - phi^2")?;
    let ansatz = Ansatz::new("class3", &refs, &["v"])
        .set("u", rat(&ctx, "Phi*v")?)
        .with_constraints(c)
        .with_chart(chart(&ctx, &["Phi", "r"])?);
    Ok(ReductionCase {
        id: format!("thm1:class3:n={n}"),
        paper_ref: "u = Phi(theta) v, v_t = v_rr + v_r/r - lambda v/r^2 + remaining v_ii".into(),
        system: lhe_polar(n)?,
        ansatz,
        expected: vec![polar_reduced(&ctx, n, &RatFn::symbol(Symbol::param("lambda")))?],
    })
}

/// The separated ansatz with the closed-form factor of one `phi` family.
pub fn family_ansatz(n: usize, family: PhiFamily, kappa: &RatFn) -> Result<ReductionCase> {
    let ctx = polar_context(n);
    let sol = phi_family(family, kappa)?;
    let omega = polar_omega(n);
    let refs: Vec<&str> = omega.iter().map(String::as_str).collect();
    let v = rat(&ctx, "v")?;
    let mut ch = chart(&ctx, &["r"])?.nonvanishing(&sol.factor.to_expr())?;
    if family != PhiFamily::D {
        ch = ch.nonvanishing(&kappa.to_expr())?;
    }
    let ansatz = Ansatz::new(&format!("family {}", family.id()), &refs, &["v"])
        .set("u", sol.factor.mul(&v))
        .with_chart(ch);
    Ok(ReductionCase {
        id: format!("thm1:Qtilde2:family={}:n={n}", family.id()),
        paper_ref: format!("phi family ({}), u = Phi(theta) v", family.id()),
        system: lhe_polar(n)?,
        ansatz,
        expected: vec![polar_reduced(&ctx, n, &sol.lambda)?],
    })
}

/// `u1 = v1, u2 = v2, u3 = x3 v3 + psi(t, v3), p = q + chi x3^2 / 2` with
/// `psi_t = (w^2 + chi) psi_w - w psi`.
pub fn euler_ansatz() -> Result<ReductionCase> {
    let omega = ["t", "x1", "x2"];
    let ctx = Context::new()
        .indeps(&["t", "x1", "x2", "x3", "w"])
        .deps(&["u1", "u2", "u3", "p"])
        .ufn("chi", &["t"])
        .ufn("psi", &["t", "w"])
        .ufn("v1", &omega)
        .ufn("v2", &omega)
        .ufn("v3", &omega)
        .ufn("q", &omega);
    let mut c = ConstraintSet::new();
    constraint(&ctx, &mut c, "psi_t", "(w^2 + chi)*psi_w - w*psi")?;
    let ansatz = Ansatz::new("euler", &omega, &["v1", "v2", "v3", "q"])
        .set("u1", rat(&ctx, "v1")?)
        .set("u2", rat(&ctx, "v2")?)
        .set("u3", rat(&ctx, "x3*v3 + psi(t, v3)")?)
        .set("p", rat(&ctx, "q + chi*x3^2/2")?)
        .with_constraints(c)
        .with_chart(chart(&ctx, &["x3 + psi_w(t, v3)"])?);
    let expected = [
        "v1_t + v1*v1_x1 + v2*v1_x2 + q_x1",
        "v2_t + v1*v2_x1 + v2*v2_x2 + q_x2",
        "v3_t + v1*v3_x1 + v2*v3_x2 + v3^2 + chi",
        "v1_x1 + v2_x2 + v3",
    ]
    .iter()
    .map(|s| rat(&ctx, s))
    .collect::<Result<Vec<_>>>()?;
    Ok(ReductionCase {
        id: "thm2:reduction".into(),
        paper_ref: "u3 = x3 v3 + psi(t, v3), p = q + chi x3^2/2, psi_t = (v3^2 + chi) psi_v3 - v3 psi".into(),
        system: euler()?,
        ansatz,
        expected,
    })
}

fn dim(s: &str, id: &str) -> Result<usize> {
    s.strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::UnknownId(id.to_string()))
}

/// Looks up a theorem operator: `thm1:Qtilde0:n=N:NAME`,
/// `thm1:Qtilde1:n=N`, `thm1:Qtilde2:n=N` or `thm2:Qtilde`.
pub fn operator(id: &str) -> Result<TheoremOperator> {
    let unknown = || Error::UnknownId(id.to_string());
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["thm2", "Qtilde"] => euler_operator(),
        ["thm1", "Qtilde1", n] => qtilde1(dim(n, id)?),
        ["thm1", "Qtilde2", n] => qtilde2(dim(n, id)?),
        ["thm1", "Qtilde0", n, _] => qtilde0(dim(n, id)?)?
            .into_iter()
            .find(|op| op.id == id)
            .ok_or_else(unknown),
        _ => Err(unknown()),
    }
}

/// Looks up a reduction: `thm1:class2:n=N`, `thm1:class3:n=N`,
/// `thm1:Qtilde2:family=F:n=N` (symbolic `kappa`) or `thm2:reduction`.
pub fn reduction_case(id: &str) -> Result<ReductionCase> {
    let unknown = || Error::UnknownId(id.to_string());
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["thm2", "reduction"] => euler_ansatz(),
        ["thm1", "class2", n] => class2_ansatz(dim(n, id)?),
        ["thm1", "class3", n] => class3_ansatz(dim(n, id)?),
        ["thm1", "Qtilde2", fam, n] => {
            let f = fam
                .strip_prefix("family=")
                .and_then(PhiFamily::parse)
                .ok_or_else(unknown)?;
            family_ansatz(dim(n, id)?, f, &RatFn::symbol(Symbol::param("kappa")))
        }
        _ => Err(unknown()),
    }
}

fn small(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Coeff {
    Coeff::new(rng.gen_range(lo..=hi).into(), rng.gen_range(1..=3i64).into())
}

/// `c0 + sum c_i z_i^2` with `c0 > 0` and `c_i >= 0`; positive for real
/// arguments.
fn positive(rng: &mut ChaCha8Rng, vars: &[Symbol]) -> RatFn {
    let mut r = RatFn::constant(small(rng, 1, 4));
    for z in vars {
        let c = small(rng, 0, 3);
        let s = RatFn::symbol(z.clone());
        r = r.add(&s.mul(&s).scale(&c));
    }
    r
}

/// A random invertible upper-triangular `l x l` mixing matrix over small
/// rational polynomials in `vars`, with a chart declaring its diagonal
/// nonvanishing.
pub fn lambda_mixing_chart(seed: u64, l: usize, vars: &[Symbol]) -> Result<(Vec<Vec<RatFn>>, Chart)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ch = Chart::new();
    let mut m = vec![vec![RatFn::zero(); l]; l];
    for (i, row) in m.iter_mut().enumerate() {
        let d = positive(&mut rng, vars);
        ch = ch.nonvanishing(&d.to_expr())?;
        row[i] = d;
        for entry in row.iter_mut().skip(i + 1) {
            let mut e = RatFn::constant(small(&mut rng, -2, 2));
            for z in vars {
                e = e.add(&RatFn::symbol(z.clone()).scale(&small(&mut rng, -2, 2)));
            }
            *entry = e;
        }
    }
    Ok((m, ch))
}

/// Chart entries that the flows of `g` divide by, with `eps` set.
pub fn generic_chart(g: &Generator, eps: &RatFn) -> Result<Chart> {
    let mut sub = BTreeMap::new();
    sub.insert(Symbol::param("eps"), eps.clone());
    let mut ch = Chart::new();
    for e in &g.generic {
        let r = substitute_symbols(&RatFn::from_expr(e)?, &sub)?;
        if r.as_constant().is_none() {
            ch = ch.nonvanishing(&r.to_expr())?;
        }
    }
    Ok(ch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::DEFAULT_SEED;
    use crate::invariance::{lie_check, qcond_check};
    use crate::reduction::verify_reduction;

    #[test]
    fn qtilde1_is_conditional_not_lie() {
        let op = qtilde1(2).unwrap();
        let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
        assert!(r.is_invariant(), "{r}");
        let l = lie_check(&op.system, &op.family.members[0], &op.constraints, DEFAULT_SEED).unwrap();
        assert!(!l.is_invariant());
    }

    #[test]
    fn qtilde2_in_the_polar_chart() {
        let op = qtilde2(2).unwrap();
        let r = qcond_check(&op.system, &op.family, &op.constraints, &op.chart, DEFAULT_SEED).unwrap();
        assert!(r.is_invariant(), "{r}");
    }

    #[test]
    fn printed_projective_generator_is_rejected() {
        for n in 1..=3 {
            let sys = lhe(n).unwrap();
            let r = lie_check(&sys, &pi_literal(n).unwrap(), &ConstraintSet::new(), DEFAULT_SEED).unwrap();
            assert!(!r.is_invariant(), "n={n}");
        }
    }

    #[test]
    fn separated_reductions() {
        for case in [
            class2_ansatz(2).unwrap(),
            class3_ansatz(2).unwrap(),
            class3_ansatz(3).unwrap(),
        ] {
            assert!(
                verify_reduction(&case.system, &case.ansatz, &case.expected).unwrap(),
                "{}",
                case.id
            );
        }
        let kappa = RatFn::symbol(Symbol::param("kappa"));
        for fam in PhiFamily::ALL {
            let case = family_ansatz(2, fam, &kappa).unwrap();
            assert!(
                verify_reduction(&case.system, &case.ansatz, &case.expected).unwrap(),
                "{}",
                case.id
            );
        }
    }

    #[test]
    fn euler_reduction() {
        let case = euler_ansatz().unwrap();
        assert!(verify_reduction(&case.system, &case.ansatz, &case.expected).unwrap());
    }

    #[test]
    fn mixing_matrices_are_deterministic_and_triangular() {
        let vars = [Symbol::indep("x1"), Symbol::dep("u")];
        let (a, _) = lambda_mixing_chart(7, 2, &vars).unwrap();
        let (b, ch) = lambda_mixing_chart(7, 2, &vars).unwrap();
        assert_eq!(a, b);
        assert!(a[1][0].is_zero());
        assert!(ch.is_nonvanishing(&a[0][0]) && ch.is_nonvanishing(&a[1][1]));
    }
}
