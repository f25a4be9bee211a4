use std::collections::{BTreeMap, HashMap};

use super::canon::{make_fn, make_ufn, Atom, Poly, RatFn};
use super::diff::{derive, Partial};
use super::{ElemFn, Expr, Name, Symbol};
use crate::error::{Error, Result};

/// Rebuilds `r` bottom-up, replacing atoms for which `f` returns a value.
///
/// `f` sees each atom as it appears in `r` (maximal match first); atoms it
/// declines are rebuilt with their arguments mapped recursively. All
/// replacements are simultaneous.
pub fn map_atoms(r: &RatFn, f: &mut dyn FnMut(&Atom) -> Option<RatFn>) -> Result<RatFn> {
    let mut m = Mapper {
        f,
        cache: HashMap::new(),
    };
    m.rat(r)
}

struct Mapper<'a> {
    f: &'a mut dyn FnMut(&Atom) -> Option<RatFn>,
    cache: HashMap<Atom, Option<RatFn>>,
}

impl Mapper<'_> {
    fn expr(&mut self, e: &Expr) -> Result<Option<RatFn>> {
        let r = RatFn::from_expr(e)?;
        let out = self.rat(&r)?;
        Ok(if out == r { None } else { Some(out) })
    }

    /// New value of the atom's base, or `None` when unchanged.
    fn atom(&mut self, a: &Atom) -> Result<Option<RatFn>> {
        if let Some(v) = self.cache.get(a) {
            return Ok(v.clone());
        }
        let v = if let Some(v) = (self.f)(a) {
            Some(v)
        } else {
            match a {
                Atom::Sym(_) => None,
                Atom::Fn(f, arg) => match self.expr(arg)? {
                    Some(na) => Some(make_fn(*f, &na)?),
                    None => None,
                },
                Atom::Exp(arg) => match self.expr(arg)? {
                    Some(na) => Some(make_fn(ElemFn::Exp, &na)?),
                    None => None,
                },
                Atom::UFn(u) => {
                    let mut changed = false;
                    let mut args = Vec::with_capacity(u.args.len());
                    for arg in &u.args {
                        match self.expr(arg)? {
                            Some(na) => {
                                changed = true;
                                args.push(na.to_expr());
                            }
                            None => args.push(arg.clone()),
                        }
                    }
                    changed.then(|| make_ufn(&u.name, u.deriv.clone(), args))
                }
                Atom::Root(base) => self.expr(base)?,
            }
        };
        self.cache.insert(a.clone(), v.clone());
        Ok(v)
    }

    fn poly(&mut self, p: &Poly) -> Result<RatFn> {
        let mut plain = Poly::zero();
        let mut acc = RatFn::zero();
        for (m, c) in p.terms() {
            let mut term: Option<RatFn> = None;
            let mut kept = super::Monomial::one();
            for (a, e) in m.factors() {
                match self.atom(a)? {
                    None => kept = kept.mul(&super::Monomial::atom_pow(a.clone(), *e)),
                    Some(v) => {
                        // for Root atoms `v` is the new polynomial base
                        let base = v.pow(*e)?;
                        term = Some(match term {
                            None => base,
                            Some(t) => t.mul(&base),
                        });
                    }
                }
            }
            match term {
                None => plain.add_term(m.clone(), c.clone()),
                Some(t) => {
                    let t = t.mul(&RatFn::from_poly(Poly::term(kept, c.clone())));
                    if t.den().is_empty() {
                        plain = plain.add(t.num());
                    } else {
                        acc = acc.add(&t);
                    }
                }
            }
        }
        Ok(acc.add(&RatFn::from_poly(plain)))
    }

    fn rat(&mut self, r: &RatFn) -> Result<RatFn> {
        let mut out = self.poly(r.num())?;
        for (f, k) in r.den() {
            let nf = self.poly(f)?;
            out = out.mul(&nf.powi(-(*k as i64))?);
        }
        Ok(out)
    }
}

/// Simultaneous substitution of symbols.
pub fn substitute_symbols(r: &RatFn, map: &BTreeMap<Symbol, RatFn>) -> Result<RatFn> {
    if map.is_empty() {
        return Ok(r.clone());
    }
    map_atoms(r, &mut |a| match a {
        Atom::Sym(s) => map.get(s).cloned(),
        _ => None,
    })
}

/// Simultaneous replacement of atoms given as `(pattern, replacement)`
/// pairs; patterns must normalize to a single symbol or function
/// application. The result is normalized.
pub fn substitute(e: &Expr, rules: &[(Expr, Expr)]) -> Result<Expr> {
    let mut table: HashMap<Atom, (RatFn, String)> = HashMap::new();
    for (pat, rep) in rules {
        let pr = RatFn::from_expr(pat)?;
        let atom = pr
            .as_atom()
            .cloned()
            .ok_or_else(|| Error::Invalid(format!("substitution pattern `{pat}` is not a symbol or function head")))?;
        let rr = RatFn::from_expr(rep)?;
        if let Some((prev, _)) = table.get(&atom) {
            if *prev != rr {
                return Err(Error::ConflictingRules(pat.to_string()));
            }
        }
        table.insert(atom, (rr, pat.to_string()));
    }
    let r = RatFn::from_expr(e)?;
    let out = map_atoms(&r, &mut |a| table.get(a).map(|(v, _)| v.clone()))?;
    Ok(out.to_expr())
}

/// Replaces every application of the undetermined function `fname`,
/// including its derivatives, by `body` (a function of `formals`).
pub fn substitute_function(r: &RatFn, fname: &Name, formals: &[Symbol], body: &RatFn) -> Result<RatFn> {
    let mut derivs: HashMap<Vec<u32>, RatFn> = HashMap::new();
    let mut err = None;
    let out = map_atoms(r, &mut |a| {
        let Atom::UFn(u) = a else { return None };
        if u.name != *fname {
            return None;
        }
        if u.args.len() != formals.len() {
            err = Some(Error::Arity {
                name: fname.to_string(),
                expected: formals.len(),
                found: u.args.len(),
            });
            return None;
        }
        let d = derivs
            .entry(u.deriv.clone())
            .or_insert_with(|| {
                let mut v = body.clone();
                for (k, n) in u.deriv.iter().enumerate() {
                    for _ in 0..*n {
                        v = derive(&v, &Partial(formals[k].clone()));
                    }
                }
                v
            })
            .clone();
        let mut map = BTreeMap::new();
        for (s, arg) in formals.iter().zip(&u.args) {
            match RatFn::from_expr(arg) {
                Ok(v) => {
                    map.insert(s.clone(), v);
                }
                Err(e) => err = Some(e),
            }
        }
        // the arguments themselves may contain the function being replaced
        let args_done = map
            .into_iter()
            .map(|(s, v)| substitute_function(&v, fname, formals, body).map(|v| (s, v)))
            .collect::<Result<BTreeMap<_, _>>>();
        match args_done {
            Ok(m) => substitute_symbols(&d, &m).map_err(|e| err = Some(e)).ok(),
            Err(e) => {
                err = Some(e);
                None
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
