use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Coeff, Exponent, Expr, Symbol, UFnApp};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 4;
const ATOM: u8 = 5;

pub(super) fn write_symbol(f: &mut fmt::Formatter<'_>, s: &Symbol) -> fmt::Result {
    match s {
        Symbol::Indep(n) | Symbol::Param(n) => f.write_str(n),
        Symbol::Jet(c) => {
            f.write_str(&c.dep)?;
            let vars: Vec<&str> = c
                .derivs
                .iter()
                .flat_map(|(n, k)| std::iter::repeat_n(&**n, *k as usize))
                .collect();
            match vars.len() {
                0 => Ok(()),
                1 => write!(f, "_{}", vars[0]),
                _ => write!(f, "_{{{}}}", vars.join(" ")),
            }
        }
    }
}

pub(super) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    let mut s = String::new();
    render(&mut s, e, 0);
    f.write_str(&s)
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if c.is_integer() && !c.is_negative() => ATOM,
        Expr::Const(c) if c.is_integer() => SUM,
        Expr::Const(_) => PRODUCT,
        Expr::Sym(_) | Expr::Fn(..) | Expr::UFn(_) => ATOM,
        Expr::Sum(_) => SUM,
        Expr::Pow(_, k) if *k < Exponent::from_integer(0) => PRODUCT,
        Expr::Pow(..) => POWER,
        Expr::Product(_) => {
            if negated(e).is_some() {
                SUM
            } else {
                PRODUCT
            }
        }
    }
}

fn render(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        render(out, e, 0);
        out.push(')');
        return;
    }
    match e {
        Expr::Const(c) => {
            let _ = write!(out, "{c}");
        }
        Expr::Sym(s) => {
            let _ = write!(out, "{s}");
        }
        Expr::Fn(func, arg) => {
            out.push_str(func.name());
            out.push('(');
            render(out, arg, 0);
            out.push(')');
        }
        Expr::UFn(u) => render_ufn(out, u),
        Expr::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                match (i, negated(t)) {
                    (0, _) => render(out, t, SUM),
                    (_, Some(n)) => {
                        out.push_str(" - ");
                        render(out, &n, PRODUCT);
                    }
                    (_, None) => {
                        out.push_str(" + ");
                        render(out, t, PRODUCT);
                    }
                }
            }
        }
        Expr::Pow(_, k) if *k < Exponent::from_integer(0) => render_product(out, std::slice::from_ref(e)),
        Expr::Pow(b, k) => {
            render(out, b, ATOM);
            render_exponent(out, k);
        }
        Expr::Product(fs) => render_product(out, fs),
    }
}

fn render_exponent(out: &mut String, k: &Exponent) {
    if k.is_integer() && *k.numer() >= 0 {
        let _ = write!(out, "^{}", k.numer());
    } else {
        let _ = write!(out, "^({k})");
    }
}

fn render_product(out: &mut String, fs: &[Expr]) {
    let mut c = Coeff::one();
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for f in fs {
        match f {
            Expr::Const(k) => c *= k,
            Expr::Pow(b, k) if *k < Exponent::from_integer(0) => {
                if *k == -Exponent::one() {
                    den.push((**b).clone());
                } else {
                    den.push(Expr::Pow(b.clone(), -*k));
                }
            }
            other => num.push(other.clone()),
        }
    }
    if c.is_negative() {
        out.push('-');
        c = -c;
    }
    let p = c.numer().clone();
    let q = c.denom().clone();
    let mut first = true;
    if !p.is_one() || num.is_empty() {
        let _ = write!(out, "{p}");
        first = false;
    }
    for f in &num {
        if !first {
            out.push('*');
        }
        render(out, f, PRODUCT + 1);
        first = false;
    }
    let mut dparts: Vec<Expr> = Vec::new();
    if !q.is_one() {
        dparts.push(Expr::Const(Coeff::from_integer(q)));
    }
    dparts.extend(den);
    match dparts.len() {
        0 => {}
        1 => {
            out.push('/');
            render(out, &dparts[0], POWER);
        }
        _ => {
            out.push_str("/(");
            for (i, d) in dparts.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                render(out, d, PRODUCT + 1);
            }
            out.push(')');
        }
    }
}

/// `-e` when `e` visibly carries a negative sign.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Const(c) if c.is_negative() => Some(Expr::Const(-c)),
        Expr::Product(fs) => match fs.first() {
            Some(Expr::Const(c)) if c.is_negative() => {
                let mut rest: Vec<Expr> = fs[1..].to_vec();
                if !(-c).is_one() {
                    rest.insert(0, Expr::Const(-c));
                }
                Some(Expr::product(rest))
            }
            _ => None,
        },
        _ => None,
    }
}

/// Derivative slots are named by their argument when every argument is a
/// distinct plain symbol, and by `#k` (1-based) otherwise.
fn render_ufn(out: &mut String, u: &UFnApp) {
    out.push_str(&u.name);
    if u.order() > 0 {
        let names: Option<Vec<String>> = {
            let syms: Vec<Option<&Symbol>> = u.args.iter().map(Expr::as_symbol).collect();
            let mut seen = Vec::new();
            let mut ok = true;
            for s in &syms {
                match s {
                    Some(s)
                        if (matches!(s, Symbol::Indep(_) | Symbol::Param(_))
                            || matches!(s, Symbol::Jet(j) if j.order() == 0))
                            && !seen.contains(s) =>
                    {
                        seen.push(*s)
                    }
                    _ => ok = false,
                }
            }
            ok.then(|| seen.iter().map(|s| s.to_string()).collect())
        };
        let mut slots = Vec::new();
        for (k, n) in u.deriv.iter().enumerate() {
            for _ in 0..*n {
                slots.push(match &names {
                    Some(ns) => ns[k].clone(),
                    None => format!("#{}", k + 1),
                });
            }
        }
        let _ = write!(out, "_{{{}}}", slots.join(" "));
    }
    out.push('(');
    for (i, a) in u.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        render(out, a, 0);
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{normalize, ElemFn};

    #[test]
    fn jet_coordinates() {
        assert_eq!(Expr::jet("u", &["t"]).to_string(), "u_t");
        assert_eq!(Expr::jet("u", &["x1", "x1"]).to_string(), "u_{x1 x1}");
    }

    #[test]
    fn signs_and_quotients() {
        let x = Expr::indep("x");
        let e = normalize(&(Expr::int(1) - Expr::rational(1, 2) * x.clone() * x.clone())).unwrap();
        assert_eq!(e.to_string(), "1 - x^2/2");
        let q = normalize(&(Expr::int(1) / (Expr::int(1) + x.clone()))).unwrap();
        assert_eq!(q.to_string(), "1/(1 + x)");
        let s = Expr::func(ElemFn::Sin, x).pow(Exponent::new(1, 2));
        assert_eq!(s.to_string(), "sin(x)^(1/2)");
    }

    #[test]
    fn function_slots() {
        let t = Expr::indep("t");
        let x = Expr::indep("x");
        let g = Expr::ufn_deriv("g", vec![1, 2], vec![t.clone(), x.clone()]);
        assert_eq!(g.to_string(), "g_{t x x}(t, x)");
        let h = Expr::ufn_deriv("h", vec![1], vec![t * x]);
        assert_eq!(h.to_string(), "h_{#1}(t*x)");
    }
}
