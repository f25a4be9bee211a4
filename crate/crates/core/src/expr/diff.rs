use std::collections::HashMap;

use num_traits::One;

use super::canon::{make_fn, make_ufn, Atom, Monomial, Poly, RatFn};
use super::{Coeff, ElemFn, Exponent, Symbol};

/// A derivation on expressions, determined by its value on symbols.
///
/// Elementary and undetermined functions are handled by the chain rule, so
/// partial derivatives, total derivatives and vector-field actions are all
/// instances of this trait.
pub trait Derivation {
    fn leaf(&self, s: &Symbol) -> RatFn;
}

/// `∂/∂s`.
pub struct Partial(pub Symbol);

impl Derivation for Partial {
    fn leaf(&self, s: &Symbol) -> RatFn {
        if *s == self.0 {
            RatFn::one()
        } else {
            RatFn::zero()
        }
    }
}

fn exponent_coeff(e: &Exponent) -> Coeff {
    Coeff::new((*e.numer()).into(), (*e.denom()).into())
}

struct Deriver<'a, D: Derivation + ?Sized> {
    d: &'a D,
    cache: HashMap<Atom, RatFn>,
}

impl<D: Derivation + ?Sized> Deriver<'_, D> {
    fn arg(&mut self, e: &super::Expr) -> RatFn {
        match RatFn::from_expr(e) {
            Ok(r) => self.rat(&r),
            Err(_) => RatFn::zero(),
        }
    }

    fn atom(&mut self, a: &Atom) -> RatFn {
        if let Some(r) = self.cache.get(a) {
            return r.clone();
        }
        let r = match a {
            Atom::Sym(s) => self.d.leaf(s),
            Atom::Exp(arg) => {
                let da = self.arg(arg);
                if da.is_zero() {
                    RatFn::zero()
                } else {
                    RatFn::from_atom(a.clone()).mul(&da)
                }
            }
            Atom::Fn(f, arg) => {
                let da = self.arg(arg);
                if da.is_zero() {
                    RatFn::zero()
                } else {
                    let inner = RatFn::from_expr(arg).unwrap_or_default();
                    let outer = match f {
                        ElemFn::Log => inner.inv().unwrap_or_default(),
                        ElemFn::Sin => make_fn(ElemFn::Cos, &inner).unwrap_or_default(),
                        ElemFn::Cos => make_fn(ElemFn::Sin, &inner).unwrap_or_default().neg(),
                        ElemFn::Sinh => make_fn(ElemFn::Cosh, &inner).unwrap_or_default(),
                        ElemFn::Cosh => make_fn(ElemFn::Sinh, &inner).unwrap_or_default(),
                        // never atoms: rewritten on construction
                        ElemFn::Exp | ElemFn::Tan | ElemFn::Tanh | ElemFn::Coth => {
                            unreachable!("{f:?} is not an atom head")
                        }
                    };
                    outer.mul(&da)
                }
            }
            Atom::UFn(u) => {
                let mut acc = RatFn::zero();
                for (k, arg) in u.args.iter().enumerate() {
                    let da = self.arg(arg);
                    if da.is_zero() {
                        continue;
                    }
                    let mut deriv = u.deriv.clone();
                    deriv[k] += 1;
                    acc = acc.add(&make_ufn(&u.name, deriv, u.args.clone()).mul(&da));
                }
                acc
            }
            // d(P) for the polynomial base; the exponent is applied by the caller
            Atom::Root(base) => self.arg(base),
        };
        self.cache.insert(a.clone(), r.clone());
        r
    }

    fn poly(&mut self, p: &Poly) -> RatFn {
        let mut plain = Poly::zero();
        let mut acc = RatFn::zero();
        for (m, c) in p.terms() {
            for (a, e) in m.factors() {
                let da = self.atom(a);
                if da.is_zero() {
                    continue;
                }
                // c · e · m / a · a'
                let rest = m.mul(&Monomial::atom_pow(a.clone(), -Exponent::one()));
                let k = c * exponent_coeff(e);
                let term = RatFn::from_poly(Poly::term(rest, k)).mul(&da);
                if term.den().is_empty() {
                    plain = plain.add(term.num());
                } else {
                    acc = acc.add(&term);
                }
            }
        }
        acc.add(&RatFn::from_poly(plain))
    }

    fn rat(&mut self, r: &RatFn) -> RatFn {
        let dn = self.poly(r.num());
        if r.den().is_empty() {
            return dn;
        }
        // (N / Π Fᵢ^kᵢ)' = N'/D − N Σ kᵢ Fᵢ' / (Fᵢ D)
        let inv_den = r.den().iter().fold(RatFn::one(), |acc, (f, k)| {
            acc.mul(&RatFn::from_poly(f.clone()).powi(-(*k as i64)).unwrap_or_default())
        });
        let mut out = dn.mul(&inv_den);
        let n = RatFn::from_poly(r.num().clone());
        for (f, k) in r.den() {
            let df = self.poly(f);
            if df.is_zero() {
                continue;
            }
            let fi = RatFn::from_poly(f.clone()).inv().unwrap_or_default();
            let t = n
                .mul(&df)
                .mul(&fi)
                .mul(&inv_den)
                .scale(&Coeff::from_integer((*k as i64).into()));
            out = out.sub(&t);
        }
        out
    }
}

/// Applies a derivation to a normal form.
pub fn derive<D: Derivation + ?Sized>(r: &RatFn, d: &D) -> RatFn {
    let mut dv = Deriver {
        d,
        cache: HashMap::new(),
    };
    dv.rat(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{differentiate, normalize, Expr};

    fn d(e: &Expr, s: &str) -> Expr {
        differentiate(e, &Symbol::indep(s)).unwrap()
    }

    fn same(a: &Expr, b: &Expr) {
        let d = normalize(&(a.clone() - b.clone())).unwrap();
        assert!(d.is_const_zero(), "{a} vs {b}");
    }

    #[test]
    fn tan_derivative_matches_table() {
        let k = Expr::param("kappa");
        let th = Expr::indep("theta");
        let tan = Expr::func(ElemFn::Tan, k.clone() * th);
        same(&d(&tan, "theta"), &(k * (Expr::int(1) + tan.clone() * tan)));
    }

    #[test]
    fn hyperbolic_derivatives() {
        let x = Expr::indep("x");
        let th = Expr::func(ElemFn::Tanh, x.clone());
        same(&d(&th, "x"), &(Expr::int(1) - th.clone() * th));
        let ct = Expr::func(ElemFn::Coth, x.clone());
        same(&d(&ct, "x"), &(Expr::int(1) - ct.clone() * ct));
        let lg = Expr::func(ElemFn::Log, x.clone() * x.clone());
        same(&d(&lg, "x"), &(Expr::int(2) / x));
    }

    #[test]
    fn product_rule_with_undetermined_functions() {
        let t = Expr::indep("t");
        let x = Expr::indep("x");
        let g = Expr::ufn("g", vec![t.clone(), x.clone()]);
        let v = Expr::ufn("v", vec![t.clone(), x.clone()]);
        let gt = Expr::ufn_deriv("g", vec![1, 0], vec![t.clone(), x.clone()]);
        let vt = Expr::ufn_deriv("v", vec![1, 0], vec![t, x]);
        same(&d(&(g.clone() * v.clone()), "t"), &(gt * v + g * vt));
    }

    #[test]
    fn chain_rule_through_arguments() {
        let x = Expr::indep("x");
        let f = Expr::ufn("f", vec![x.clone() * x.clone()]);
        let f1 = Expr::ufn_deriv("f", vec![1], vec![x.clone() * x.clone()]);
        same(&d(&f, "x"), &(Expr::int(2) * x * f1));
    }

    #[test]
    fn quotient_rule() {
        let x = Expr::indep("x");
        let e = Expr::int(1) / (Expr::int(1) + x.clone() * x.clone());
        let den = Expr::int(1) + x.clone() * x.clone();
        same(&d(&e, "x"), &(Expr::int(-2) * x / (den.clone() * den)));
    }

    #[test]
    fn jet_coordinate_partial() {
        let u = Expr::dep("u");
        let e = Expr::indep("x1") * Expr::indep("x1") * u;
        let r = differentiate(&e, &Symbol::dep("u")).unwrap();
        same(&r, &(Expr::indep("x1") * Expr::indep("x1")));
    }
}
