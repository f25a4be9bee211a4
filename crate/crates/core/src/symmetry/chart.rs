use crate::error::Result;
use crate::expr::{nonvanishing_core, Atom, Coeff, Expr, Monomial, Name, Poly, RatFn};

/// Declarations of what may be divided by.
///
/// An expression counts as nonvanishing when its cleared numerator is a
/// nonzero constant times a monomial in declared atoms times declared
/// polynomials. Exponentials and nonzero constants are always accepted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chart {
    atoms: Vec<Atom>,
    functions: Vec<Name>,
    polys: Vec<Poly>,
    notes: Vec<String>,
}

fn monic(p: &Poly) -> Poly {
    let m = p.content_monomial();
    let q = if m.is_one() {
        p.clone()
    } else {
        p.mul_term(&m.inv(), &Coeff::from_integer(1.into()))
    };
    match q.leading().map(|(_, c)| c.clone()) {
        Some(c) => q.scale(&(Coeff::from_integer(1.into()) / c)),
        None => q,
    }
}

impl Chart {
    pub fn new() -> Self {
        Chart::default()
    }

    /// Declares `e` nonvanishing. Single atoms are recorded as atoms (an
    /// undetermined function covers all its derivatives' base applications
    /// by name); anything else as a polynomial factor.
    pub fn nonvanishing(mut self, e: &Expr) -> Result<Self> {
        let r = RatFn::from_expr(e)?;
        self.notes.push(format!("{e} != 0"));
        match r.as_atom() {
            Some(Atom::UFn(u)) if u.order() == 0 => self.functions.push(u.name.clone()),
            Some(a) => self.atoms.push(a.clone()),
            None => {
                let core = nonvanishing_core(&r);
                let m = core.content_monomial();
                for (a, _) in m.factors() {
                    if !self.atoms.contains(a) {
                        self.atoms.push(a.clone());
                    }
                }
                let q = monic(&core);
                if q.as_constant().is_none() {
                    self.polys.push(q);
                }
            }
        }
        Ok(self)
    }

    pub fn merged(&self, other: &Chart) -> Chart {
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().cloned());
        out.functions.extend(other.functions.iter().cloned());
        out.polys.extend(other.polys.iter().cloned());
        out.notes.extend(other.notes.iter().cloned());
        out
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    fn atom_ok(&self, a: &Atom) -> bool {
        match a {
            Atom::Exp(_) => true,
            // zero arguments are folded away, and no rational is a zero of these
            Atom::Fn(_, Expr::Const(_)) => true,
            Atom::UFn(u) if u.order() == 0 && self.functions.contains(&u.name) => true,
            Atom::Root(base) => match RatFn::from_expr(base) {
                Ok(r) => self.poly_ok(r.num()),
                Err(_) => false,
            },
            other => self.atoms.contains(other),
        }
    }

    fn monomial_ok(&self, m: &Monomial) -> bool {
        m.factors().iter().all(|(a, _)| self.atom_ok(a))
    }

    fn poly_ok(&self, p: &Poly) -> bool {
        if p.is_zero() {
            return false;
        }
        let m = p.content_monomial();
        if !self.monomial_ok(&m) {
            return false;
        }
        let mut q = monic(p);
        'outer: loop {
            if q.as_constant().is_some() {
                return true;
            }
            if let Some((m, _)) = q.single_term() {
                return self.monomial_ok(m);
            }
            for f in &self.polys {
                if let Some(d) = q.div_exact(f) {
                    q = monic(&d);
                    continue 'outer;
                }
            }
            return false;
        }
    }

    pub fn is_nonvanishing(&self, r: &RatFn) -> bool {
        self.poly_ok(&nonvanishing_core(r))
    }
}
