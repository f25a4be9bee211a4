use std::collections::BTreeMap;
use std::sync::Arc;

use super::{polar_names, rat, xs, SystemId};
use crate::error::{Error, Result};
use crate::expr::parse::Context;
use crate::expr::{substitute_symbols, ConstraintSet, Expr, RatFn, Symbol};
use crate::symmetry::VectorField;

/// A named generator, the side conditions on its arbitrary functions and
/// the expressions its flow divides by for generic `eps`.
#[derive(Clone, Debug)]
pub struct Generator {
    pub field: VectorField,
    pub constraints: ConstraintSet,
    pub generic: Vec<Expr>,
}

struct Builder {
    ctx: Context,
    out: Vec<Generator>,
}

impl Builder {
    fn new(ctx: Context) -> Self {
        Builder { ctx, out: Vec::new() }
    }

    /// Adds `name = src` whose flow sends each listed coordinate to its
    /// image, written in terms of `eps`.
    fn add(&mut self, name: &str, src: &str, images: &[(String, String)]) -> Result<&mut Generator> {
        let field = VectorField::new(name, self.ctx.parse_operator(src)?)?;
        let mut parsed = BTreeMap::new();
        for (k, v) in images {
            let s = self
                .ctx
                .parse_expr(k)?
                .as_symbol()
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("`{k}` is not a coordinate")))?;
            parsed.insert(s, rat(&self.ctx, v)?);
        }
        let eps = Symbol::param("eps");
        let flow = Arc::new(move |e: &RatFn| -> Result<BTreeMap<Symbol, RatFn>> {
            let mut sub = BTreeMap::new();
            sub.insert(eps.clone(), e.clone());
            parsed
                .iter()
                .map(|(k, v)| Ok((k.clone(), substitute_symbols(v, &sub)?)))
                .collect()
        });
        self.out.push(Generator {
            field: field.with_flow(flow),
            constraints: ConstraintSet::new(),
            generic: Vec::new(),
        });
        Ok(self.out.last_mut().expect("just pushed"))
    }

    fn constraint(&mut self, lhs: &str, rhs: &str) -> Result<()> {
        let (l, r) = (self.ctx.parse_expr(lhs)?, self.ctx.parse_expr(rhs)?);
        let g = self.out.last_mut().expect("generator added first");
        g.constraints.add_equation(&l, &r)
    }

    fn generic(&mut self, srcs: &[&str]) -> Result<()> {
        let parsed = srcs
            .iter()
            .map(|s| self.ctx.parse_expr(s))
            .collect::<Result<Vec<_>>>()?;
        self.out
            .last_mut()
            .expect("generator added first")
            .generic
            .extend(parsed);
        Ok(())
    }
}

fn pair(k: &str, v: String) -> (String, String) {
    (k.to_string(), v)
}

fn rotation(images: &mut Vec<(String, String)>, a: &str, b: &str) {
    images.push(pair(a, format!("{a}*cos(eps) - {b}*sin(eps)")));
    images.push(pair(b, format!("{a}*sin(eps) + {b}*cos(eps)")));
}

const TRIG: [&str; 2] = ["cos(eps)", "sin(eps)"];
const PROJECTIVE: [&str; 2] = ["1 - 4*eps*t", "1 + 4*eps*t"];

/// Heat-equation generators over the spatial variables `space`; the first
/// two are polar `(r, theta)` when `polar` is set.
fn heat(n: usize, polar: bool) -> Result<Vec<Generator>> {
    let (ctx, space): (Context, Vec<String>) = if polar {
        (super::polar_context(n), polar_names(n)[1..].to_vec())
    } else {
        (super::lhe_context(n), xs(n))
    };
    // variables carrying a translation, Galilei boost and dilation weight
    let cartesian: Vec<String> = if polar { space[2..].to_vec() } else { space.clone() };
    let radial: Vec<String> = if polar {
        let mut v = vec!["r".to_string()];
        v.extend(cartesian.iter().cloned());
        v
    } else {
        cartesian.clone()
    };
    let mut b = Builder::new(ctx);
    b.add("dt", "d/dt", &[pair("t", "t + eps".into())])?;
    for x in &cartesian {
        b.add(
            &format!("d{}", &x[1..]),
            &format!("d/d{x}"),
            &[pair(x, format!("{x} + eps"))],
        )?;
    }
    let mut d_src = "2*t*d/dt".to_string();
    let mut d_img = vec![pair("t", "exp(2*eps)*t".into())];
    for x in &radial {
        d_src.push_str(&format!(" + {x}*d/d{x}"));
        d_img.push(pair(x, format!("exp(eps)*{x}")));
    }
    b.add("D", &d_src, &d_img)?;
    for x in &cartesian {
        b.add(
            &format!("G{}", &x[1..]),
            &format!("t*d/d{x} - {x}*u/2*d/du"),
            &[
                pair(x, format!("{x} + eps*t")),
                pair("u", format!("u*exp(-eps*{x}/2 - eps^2*t/4)")),
            ],
        )?;
    }
    b.add("I", "u*d/du", &[pair("u", "exp(eps)*u".into())])?;
    if polar {
        b.add("J12", "d/dtheta", &[pair("theta", "theta + eps".into())])?;
    }
    for (i, xa) in cartesian.iter().enumerate() {
        for xb in &cartesian[i + 1..] {
            let mut img = Vec::new();
            rotation(&mut img, xa, xb);
            b.add(
                &format!("J{}{}", &xa[1..], &xb[1..]),
                &format!("{xa}*d/d{xb} - {xb}*d/d{xa}"),
                &img,
            )?;
            b.generic(&TRIG)?;
        }
    }
    let sq = radial.iter().map(|x| format!("{x}^2")).collect::<Vec<_>>().join(" + ");
    let mut pi_src = "4*t^2*d/dt".to_string();
    let mut pi_img = vec![pair("t", "t/(1 - 4*eps*t)".into())];
    for x in &radial {
        pi_src.push_str(&format!(" + 4*t*{x}*d/d{x}"));
        pi_img.push(pair(x, format!("{x}/(1 - 4*eps*t)")));
    }
    pi_src.push_str(&format!(" - ({sq} + {}*t)*u*d/du", 2 * n));
    pi_img.push(pair(
        "u",
        format!("u*(1 - 4*eps*t)^({n}/2)*exp(-eps*({sq})/(1 - 4*eps*t))"),
    ));
    b.add("Pi", &pi_src, &pi_img)?;
    b.generic(&PROJECTIVE)?;
    b.add("f", "f*d/du", &[pair("u", "u + eps*f".into())])?;
    let lap = if polar {
        let mut s = "f_{r r} + f_r/r + f_{theta theta}/r^2".to_string();
        for x in &cartesian {
            s.push_str(&format!(" + f_{{{x} {x}}}"));
        }
        s
    } else {
        cartesian
            .iter()
            .map(|x| format!("f_{{{x} {x}}}"))
            .collect::<Vec<_>>()
            .join(" + ")
    };
    b.constraint("f_t", &lap)?;
    Ok(b.out)
}

const X: [&str; 3] = ["x1", "x2", "x3"];

fn fluid(viscous: bool) -> Result<Vec<Generator>> {
    let mut b = Builder::new(super::fluid_context());
    b.add("dt", "d/dt", &[pair("t", "t + eps".into())])?;
    for a in 1..=3 {
        for c in a + 1..=3 {
            let mut img = Vec::new();
            rotation(&mut img, &format!("x{a}"), &format!("x{c}"));
            rotation(&mut img, &format!("u{a}"), &format!("u{c}"));
            b.add(
                &format!("J{a}{c}"),
                &format!("x{a}*d/dx{c} - x{c}*d/dx{a} + u{a}*d/du{c} - u{c}*d/du{a}"),
                &img,
            )?;
            b.generic(&TRIG)?;
        }
    }
    // (time weight, space weight) for t, x, u, p: t^k x^l u^(l-k) p^(2l-2k)
    let scalings: &[(&str, i64, i64)] = if viscous {
        &[("Dt+Dx/2", 2, 1)]
    } else {
        &[("Dt", 1, 0), ("Dx", 0, 1)]
    };
    for (name, k, l) in scalings {
        // the combined generator is written with weights halved
        let half = if viscous { "/2" } else { "" };
        let w = |c: i64| -> String {
            if c == 0 {
                String::new()
            } else {
                format!("{c}")
            }
        };
        let mut src = Vec::new();
        let mut img = Vec::new();
        if *k != 0 {
            src.push(format!("{}*t{half}*d/dt", w(*k)));
            img.push(pair("t", format!("exp({}*eps{half})*t", k)));
        }
        if *l != 0 {
            for x in X {
                src.push(format!("{}*{x}{half}*d/d{x}", w(*l)));
                img.push(pair(x, format!("exp({}*eps{half})*{x}", l)));
            }
        }
        for a in 1..=3 {
            src.push(format!("({})*u{a}{half}*d/du{a}", l - k));
            img.push(pair(&format!("u{a}"), format!("exp({}*eps{half})*u{a}", l - k)));
        }
        src.push(format!("({})*p{half}*d/dp", 2 * (l - k)));
        img.push(pair("p", format!("exp({}*eps{half})*p", 2 * (l - k))));
        b.add(name, &src.join(" + "), &img)?;
    }
    let mut src = Vec::new();
    let mut img = Vec::new();
    for a in 1..=3 {
        src.push(format!("m{a}*d/dx{a} + m{a}_t*d/du{a} - m{a}_{{t t}}*x{a}*d/dp"));
        img.push(pair(&format!("x{a}"), format!("x{a} + eps*m{a}")));
        img.push(pair(&format!("u{a}"), format!("u{a} + eps*m{a}_t")));
    }
    let acc = (1..=3)
        .map(|a| format!("m{a}_{{t t}}*x{a}"))
        .collect::<Vec<_>>()
        .join(" + ");
    let drift = (1..=3)
        .map(|a| format!("m{a}_{{t t}}*m{a}"))
        .collect::<Vec<_>>()
        .join(" + ");
    img.push(pair("p", format!("p - eps*({acc}) - eps^2/2*({drift})")));
    b.add("R", &src.join(" + "), &img)?;
    b.add("Z", "chi*d/dp", &[pair("p", "p + eps*chi".into())])?;
    Ok(b.out)
}

/// Generators of the symmetry algebra of a catalog system, with stored
/// flows. Arbitrary functions are kept symbolic.
pub fn algebra(id: &str) -> Result<Vec<Generator>> {
    match SystemId::parse(id)? {
        SystemId::Lhe(n) => {
            super::check_dimension(n)?;
            heat(n, false)
        }
        SystemId::LhePolar(n) => {
            if n < 2 {
                return Err(Error::UnknownId(id.to_string()));
            }
            heat(n, true)
        }
        SystemId::Euler => fluid(false),
        SystemId::Ns(_) => fluid(true),
    }
}
