//! Built-in systems, their symmetry algebras, the conditional operators
//! with their side conditions, and the expected reductions.

mod algebra;
mod theorems;
mod verify;

pub use algebra::{algebra, Generator};
pub use theorems::{
    class2_ansatz, class3_ansatz, euler_ansatz, euler_operator, family_ansatz, generic_chart, lambda_mixing_chart,
    operator, pi_literal, qtilde0, qtilde1, qtilde2, reduction_case, ReductionCase, TheoremOperator,
};
pub use verify::{
    adjoint_closure, closure_parameters, mixing_closure, verify_paper, PaperReport, Scope, SubCheck, MIXINGS,
};

use crate::error::{Error, Result};
use crate::expr::parse::Context;
use crate::expr::{Coeff, JetCoord, RatFn, Symbol};
use crate::jet::{Equation, JetSpace, PdeSystem};
use crate::reduction::{change_coordinates, CoordinateChange};

pub const MAX_DIMENSION: usize = 6;

pub(crate) fn rat(ctx: &Context, src: &str) -> Result<RatFn> {
    RatFn::from_expr(&ctx.parse_expr(src)?)
}

pub(crate) fn xs(n: usize) -> Vec<String> {
    (1..=n).map(|a| format!("x{a}")).collect()
}

fn check_dimension(n: usize) -> Result<()> {
    if !(1..=MAX_DIMENSION).contains(&n) {
        return Err(Error::Invalid(format!("dimension {n} outside 1..={MAX_DIMENSION}")));
    }
    Ok(())
}

/// Variables, parameters and side-condition functions of `u_t = u_aa`.
pub fn lhe_context(n: usize) -> Context {
    let x = xs(n);
    let mut names = vec!["t"];
    names.extend(x.iter().map(String::as_str));
    let last = x.last().map_or("t", String::as_str);
    Context::new()
        .indeps(&names)
        .deps(&["u"])
        .params(&["eps", "kappa", "lambda"])
        .ufn("f", &names)
        .ufn("g", &["t", last])
}

pub fn lhe(n: usize) -> Result<PdeSystem> {
    check_dimension(n)?;
    let ctx = lhe_context(n);
    let x = xs(n);
    let mut names = vec!["t"];
    names.extend(x.iter().map(String::as_str));
    let rhs = x
        .iter()
        .map(|a| format!("u_{{{a} {a}}}"))
        .collect::<Vec<_>>()
        .join(" + ");
    PdeSystem::new(
        &format!("lhe:n={n}"),
        JetSpace::new(&names, &["u"], 2)?,
        vec![Equation::new(JetCoord::with_derivs("u", ["t"]), rat(&ctx, &rhs)?)],
    )
}

/// Variables of the heat equation with `(x1, x2)` replaced by polar
/// coordinates `(r, theta)`.
pub fn polar_names(n: usize) -> Vec<String> {
    let mut v = vec!["t".to_string(), "r".to_string(), "theta".to_string()];
    v.extend((3..=n).map(|a| format!("x{a}")));
    v
}

pub fn polar_context(n: usize) -> Context {
    let names = polar_names(n);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut omega = vec!["t", "r"];
    omega.extend(refs[3..].iter().copied());
    Context::new()
        .indeps(&refs)
        .deps(&["u"])
        .params(&["eps", "kappa", "lambda"])
        .ufn("f", &refs)
        .ufn("phi", &["theta"])
        .ufn("Phi", &["theta"])
        .ufn("v", &omega)
}

pub fn lhe_polar(n: usize) -> Result<PdeSystem> {
    if n < 2 {
        return Err(Error::Invalid("polar coordinates need n >= 2".into()));
    }
    let sys = lhe(n)?;
    let x = xs(n);
    let mut names = vec!["t"];
    names.extend(x.iter().map(String::as_str));
    let cc = CoordinateChange::polar(&names, "x1", "x2", "r", "theta")?;
    let mut p = change_coordinates(&sys, &cc)?;
    p.id = format!("lhe:n={n}:polar");
    Ok(p)
}

const FLUID_INDEPS: [&str; 4] = ["t", "x1", "x2", "x3"];
const FLUID_DEPS: [&str; 4] = ["u1", "u2", "u3", "p"];

pub fn fluid_context() -> Context {
    Context::new()
        .indeps(&FLUID_INDEPS)
        .deps(&FLUID_DEPS)
        .params(&["eps", "nu"])
        .ufn("m1", &["t"])
        .ufn("m2", &["t"])
        .ufn("m3", &["t"])
        .ufn("chi", &["t"])
        .ufn("zeta", &["t", "x3", "u3"])
}

/// Momentum equations solved for `u^a_t`, incompressibility for `u3_x3`;
/// `nu = None` leaves the viscosity symbolic.
fn fluid(id: &str, viscous: Option<RatFn>) -> Result<PdeSystem> {
    let ctx = fluid_context();
    let mut eqs = Vec::new();
    for a in 1..=3 {
        let mut rhs = format!("-u1*u{a}_x1 - u2*u{a}_x2 - u3*u{a}_x3 - p_x{a}");
        if viscous.is_some() {
            rhs.push_str(&format!(" + nu*(u{a}_{{x1 x1}} + u{a}_{{x2 x2}} + u{a}_{{x3 x3}})"));
        }
        let mut r = rat(&ctx, &rhs)?;
        if let Some(nu) = &viscous {
            let mut m = std::collections::BTreeMap::new();
            m.insert(Symbol::param("nu"), nu.clone());
            r = crate::expr::substitute_symbols(&r, &m)?;
        }
        eqs.push(Equation::new(JetCoord::with_derivs(&format!("u{a}"), ["t"]), r));
    }
    eqs.push(Equation::new(
        JetCoord::with_derivs("u3", ["x3"]),
        rat(&ctx, "-u1_x1 - u2_x2")?,
    ));
    let order = if viscous.is_some() { 2 } else { 1 };
    PdeSystem::new(id, JetSpace::new(&FLUID_INDEPS, &FLUID_DEPS, order)?, eqs)
}

pub fn euler() -> Result<PdeSystem> {
    fluid("euler", None)
}

/// Navier-Stokes; `None` keeps `nu` as a symbol.
pub fn navier_stokes(nu: Option<Coeff>) -> Result<PdeSystem> {
    match nu {
        Some(k) if k == Coeff::from_integer(0.into()) => Err(Error::Invalid("viscosity must be nonzero".into())),
        Some(k) => fluid(&format!("ns:nu={k}"), Some(RatFn::constant(k))),
        None => fluid("ns", Some(RatFn::symbol(Symbol::param("nu")))),
    }
}

/// Parsed catalog id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemId {
    Lhe(usize),
    LhePolar(usize),
    Euler,
    Ns(Option<Coeff>),
}

impl SystemId {
    pub fn parse(id: &str) -> Result<Self> {
        let unknown = || Error::UnknownId(id.to_string());
        let parts: Vec<&str> = id.split(':').collect();
        match parts.as_slice() {
            ["euler"] => Ok(SystemId::Euler),
            ["ns"] => Ok(SystemId::Ns(None)),
            ["ns", nu] => {
                let v = nu.strip_prefix("nu=").ok_or_else(unknown)?;
                let k = crate::expr::parse::parse_rational(v).ok_or_else(unknown)?;
                Ok(SystemId::Ns(Some(k)))
            }
            ["lhe", n, rest @ ..] => {
                let n: usize = n.strip_prefix("n=").and_then(|s| s.parse().ok()).ok_or_else(unknown)?;
                match rest {
                    [] => Ok(SystemId::Lhe(n)),
                    ["polar"] => Ok(SystemId::LhePolar(n)),
                    _ => Err(unknown()),
                }
            }
            _ => Err(unknown()),
        }
    }

    pub fn system(&self) -> Result<PdeSystem> {
        match self {
            SystemId::Lhe(n) => lhe(*n),
            SystemId::LhePolar(n) => lhe_polar(*n),
            SystemId::Euler => euler(),
            SystemId::Ns(nu) => navier_stokes(nu.clone()),
        }
    }

    pub fn context(&self) -> Context {
        match self {
            SystemId::Lhe(n) => lhe_context(*n),
            SystemId::LhePolar(n) => polar_context(*n),
            SystemId::Euler | SystemId::Ns(_) => fluid_context(),
        }
    }
}

pub fn system(id: &str) -> Result<PdeSystem> {
    SystemId::parse(id)?.system()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_systems() {
        assert_eq!(lhe(1).unwrap().to_string(), "u_t = u_{x1 x1}");
        assert_eq!(lhe(3).unwrap().to_string(), "u_t = u_{x1 x1} + u_{x2 x2} + u_{x3 x3}");
        assert!(lhe(0).is_err());
        assert!(lhe(MAX_DIMENSION + 1).is_err());
    }

    #[test]
    fn fluid_systems() {
        let e = euler().unwrap();
        assert_eq!(e.equations[0].lhs, JetCoord::with_derivs("u1", ["t"]));
        let ns = navier_stokes(Some(Coeff::from_integer(1.into()))).unwrap();
        let lap = rat(&fluid_context(), "u1_{x1 x1} + u1_{x2 x2} + u1_{x3 x3}").unwrap();
        assert!(ns.equations[0].rhs.sub(&e.equations[0].rhs).sub(&lap).is_zero());
        assert!(navier_stokes(Some(Coeff::from_integer(0.into()))).is_err());
    }

    #[test]
    fn ids_round_trip() {
        assert_eq!(SystemId::parse("lhe:n=3").unwrap(), SystemId::Lhe(3));
        assert_eq!(SystemId::parse("lhe:n=2:polar").unwrap(), SystemId::LhePolar(2));
        assert_eq!(SystemId::parse("ns").unwrap(), SystemId::Ns(None));
        assert_eq!(system("ns:nu=1").unwrap().id, "ns:nu=1");
        assert!(matches!(SystemId::parse("kdv"), Err(Error::UnknownId(_))));
    }
}
