//! Rational-function normal form.
//!
//! An expression is represented as `num / Π Fᵢ^kᵢ` where `num` is a Laurent
//! polynomial over [`Atom`]s with rational coefficients and each `Fᵢ` is a
//! non-monomial polynomial made unique by stripping its monomial content and
//! leading coefficient. Atoms are the irreducible non-rational subterms:
//! symbols, elementary-function applications, undetermined-function
//! applications and fractional powers of polynomials.
//!
//! Rewrites applied while multiplying monomials:
//! - all `exp` atoms of a monomial merge into a single `exp` of the summed
//!   argument;
//! - integer powers `sin(a)^k`, `sinh(a)^k` with `k ≥ 2` reduce via
//!   `sin² = 1 − cos²` and `sinh² = cosh² − 1`;
//! - fractional powers of a polynomial keep their exponent in `(0, 1)`; the
//!   integer part is expanded into the numerator or denominator.
//!
//! `tan`, `tanh` and `coth` never appear as atoms; they are rewritten as
//! quotients on construction.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{Coeff, ElemFn, Exponent, Expr, Symbol, UFnApp};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sym(Symbol),
    /// `log`, `sin`, `cos`, `sinh` or `cosh` of a normalized argument.
    Fn(ElemFn, Expr),
    /// `exp` of a normalized, nonzero argument.
    Exp(Expr),
    UFn(Arc<UFnApp>),
    /// A normalized non-monomial polynomial carrying a fractional exponent.
    Root(Expr),
}

impl Atom {
    pub fn to_expr(&self) -> Expr {
        match self {
            Atom::Sym(s) => Expr::Sym(s.clone()),
            Atom::Fn(f, a) => Expr::Fn(*f, Arc::new(a.clone())),
            Atom::Exp(a) => Expr::Fn(ElemFn::Exp, Arc::new(a.clone())),
            Atom::UFn(u) => Expr::UFn(u.clone()),
            Atom::Root(p) => p.clone(),
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Atom::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// Whether `pred` holds for this atom or any atom nested in its arguments.
    pub fn any_nested(&self, pred: &mut dyn FnMut(&Atom) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        let args: Vec<&Expr> = match self {
            Atom::Sym(_) => return false,
            Atom::Fn(_, a) | Atom::Exp(a) | Atom::Root(a) => vec![a],
            Atom::UFn(u) => u.args.iter().collect(),
        };
        args.into_iter().any(|a| match RatFn::from_expr(a) {
            Ok(r) => r.any_atom(pred),
            Err(_) => false,
        })
    }
}

fn exp_zero() -> Exponent {
    Exponent::zero()
}

/// Product of atoms raised to nonzero rational exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, Exponent)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, Exponent::one())])
    }

    pub fn atom_pow(a: Atom, e: Exponent) -> Self {
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(a, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, Exponent)] {
        &self.0
    }

    pub fn exponent(&self, a: &Atom) -> Exponent {
        match self.0.binary_search_by(|(x, _)| x.cmp(a)) {
            Ok(i) => self.0[i].1,
            Err(_) => exp_zero(),
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.0[i].1 + other.0[j].1;
                    if !e.is_zero() {
                        out.push((self.0[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn pow(&self, e: Exponent) -> Monomial {
        if e.is_zero() {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(a, x)| (a.clone(), *x * e)).collect())
    }

    pub fn inv(&self) -> Monomial {
        self.pow(-Exponent::one())
    }

    /// Splits off the atoms matching `pred`: `(matching, rest)`.
    pub fn split(&self, mut pred: impl FnMut(&Atom) -> bool) -> (Monomial, Monomial) {
        let (a, b): (Vec<_>, Vec<_>) = self.0.iter().cloned().partition(|(x, _)| pred(x));
        (Monomial(a), Monomial(b))
    }

    fn needs_canon(&self) -> bool {
        let mut exps = 0;
        for (a, e) in &self.0 {
            match a {
                Atom::Exp(_) => {
                    exps += 1;
                    if !e.is_one() || exps > 1 {
                        return true;
                    }
                }
                Atom::Fn(ElemFn::Sin | ElemFn::Sinh, _) => {
                    if e.is_integer() && *e.numer() >= 2 {
                        return true;
                    }
                }
                Atom::Root(_) if *e >= Exponent::one() => {
                    return true;
                }
                _ => {}
            }
        }
        false
    }
}

/// Lexicographic term order: the smallest atom is the most significant.
pub fn term_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    let (mut i, mut j) = (0, 0);
    let zero = exp_zero();
    loop {
        match (a.0.get(i), b.0.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some((_, ex)), None) => return ex.cmp(&zero),
            (None, Some((_, ey))) => return zero.cmp(ey),
            (Some((x, ex)), Some((y, ey))) => match x.cmp(y) {
                Ordering::Equal => {
                    if ex != ey {
                        return ex.cmp(ey);
                    }
                    i += 1;
                    j += 1;
                }
                Ordering::Less => return ex.cmp(&zero),
                Ordering::Greater => return zero.cmp(ey),
            },
        }
    }
}

/// Laurent polynomial in atoms with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly(BTreeMap<Monomial, Coeff>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn one() -> Self {
        Poly::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.0.iter()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        match self.0.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn single_term(&self) -> Option<(&Monomial, &Coeff)> {
        if self.0.len() == 1 {
            self.0.iter().next()
        } else {
            None
        }
    }

    /// Adds a term verbatim (no monomial rewriting).
    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Adds `c·m` after applying the monomial rewrites.
    fn push_canon(&mut self, m: Monomial, c: Coeff) {
        if !m.needs_canon() {
            self.add_term(m, c);
            return;
        }
        let expanded = canon_monomial(m);
        for (mm, cc) in expanded.0 {
            self.add_term(mm, cc * &c);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (big, small) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &Coeff) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    pub fn mul_term(&self, m: &Monomial, k: &Coeff) -> Poly {
        let mut out = Poly::zero();
        for (mm, c) in &self.0 {
            out.push_canon(mm.mul(m), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                out.push_canon(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn powu(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.0.iter().max_by(|a, b| term_cmp(a.0, b.0))
    }

    pub fn trailing(&self) -> Option<(&Monomial, &Coeff)> {
        self.0.iter().min_by(|a, b| term_cmp(a.0, b.0))
    }

    /// Largest monomial dividing every term (minimum exponent per atom,
    /// where absent atoms count as exponent zero).
    pub fn content_monomial(&self) -> Monomial {
        let out = self
            .atoms()
            .into_iter()
            .filter_map(|a| {
                let e = self.min_exponent(&a);
                (!e.is_zero()).then_some((a, e))
            })
            .collect();
        Monomial(out)
    }

    fn min_exponent(&self, a: &Atom) -> Exponent {
        self.0.keys().map(|m| m.exponent(a)).min().unwrap_or_else(exp_zero)
    }

    /// Every atom appearing in the polynomial (top level only).
    pub fn atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = self.0.keys().flat_map(|m| m.0.iter().map(|(a, _)| a.clone())).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Lowest and highest exponent of each atom over all terms.
    fn exponent_ranges(&self) -> BTreeMap<Atom, (Exponent, Exponent)> {
        let mut out = BTreeMap::new();
        for a in self.atoms() {
            let mut it = self.terms().map(|(m, _)| m.exponent(&a));
            let first = it.next().unwrap_or_default();
            let (lo, hi) = it.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e)));
            out.insert(a, (lo, hi));
        }
        out
    }

    /// Exact quotient `self / f`, if `f` divides `self` in the Laurent ring.
    pub fn div_exact(&self, f: &Poly) -> Option<Poly> {
        if f.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lm_f, lc_f) = f.leading()?;
        let (low_f, _) = f.trailing()?;
        let (low_n, _) = self.trailing()?;
        let floor = low_n.mul(&low_f.inv());
        // every quotient term lies in the exponent box of `self / f`
        let (rs, rf) = (self.exponent_ranges(), f.exponent_ranges());
        let mut bounds = Vec::new();
        for (a, (lo_s, hi_s)) in &rs {
            let (lo_f, hi_f) = rf.get(a).cloned().unwrap_or_default();
            bounds.push((a.clone(), lo_s - lo_f, hi_s - hi_f));
        }
        for (a, (lo_f, hi_f)) in &rf {
            if !rs.contains_key(a) {
                bounds.push((a.clone(), -lo_f, -hi_f));
            }
        }
        if bounds.iter().any(|(_, lo, hi)| lo > hi) {
            return None;
        }
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let inv_lm = lm_f.inv();
        for _ in 0..1usize << 20 {
            let (lm_r, lc_r) = match rem.leading() {
                None => return Some(quot),
                Some((m, c)) => (m.clone(), c.clone()),
            };
            let qm = lm_r.mul(&inv_lm);
            if term_cmp(&qm, &floor) == Ordering::Less {
                return None;
            }
            if bounds.iter().any(|(a, lo, hi)| {
                let e = qm.exponent(a);
                e < *lo || e > *hi
            }) {
                return None;
            }
            let qc = lc_r / lc_f;
            for (m, c) in f.terms() {
                rem.push_canon(m.mul(&qm), -(c * &qc));
            }
            quot.add_term(qm, qc);
        }
        None
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self.0.iter().map(|(m, c)| monomial_expr(m, c)).collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => {
                terms.sort();
                Expr::Sum(Arc::new(terms))
            }
        }
    }
}

fn monomial_expr(m: &Monomial, c: &Coeff) -> Expr {
    let mut factors = Vec::new();
    if !c.is_one() || m.is_one() {
        factors.push(Expr::Const(c.clone()));
    }
    for (a, e) in &m.0 {
        let base = a.to_expr();
        if e.is_one() {
            factors.push(base);
        } else {
            factors.push(Expr::Pow(Arc::new(base), *e));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        factors.sort();
        Expr::Product(Arc::new(factors))
    }
}

/// Applies the monomial rewrites (exp merging, even trig powers, integer
/// parts of fractional polynomial powers).
fn canon_monomial(m: Monomial) -> Poly {
    let mut plain = Vec::new();
    let mut exp_args: Vec<(Expr, Exponent)> = Vec::new();
    let mut extra = Poly::one();
    for (a, e) in m.0 {
        match &a {
            Atom::Exp(arg) => exp_args.push((arg.clone(), e)),
            Atom::Fn(f @ (ElemFn::Sin | ElemFn::Sinh), arg) if e.is_integer() && *e.numer() >= 2 => {
                let k = *e.numer();
                let other = if *f == ElemFn::Sin { ElemFn::Cos } else { ElemFn::Cosh };
                let c2 = Poly::term(
                    Monomial::atom_pow(Atom::Fn(other, arg.clone()), Exponent::from_integer(2)),
                    Coeff::one(),
                );
                // sin² = 1 − cos², sinh² = cosh² − 1
                let sq = if *f == ElemFn::Sin {
                    Poly::one().sub(&c2)
                } else {
                    c2.sub(&Poly::one())
                };
                extra = extra.mul(&sq.powu((k / 2) as u32));
                if k % 2 == 1 {
                    plain.push((a.clone(), Exponent::one()));
                }
            }
            Atom::Root(base) if e >= Exponent::one() => {
                let k = e.floor();
                let frac = e - k;
                let p = RatFn::from_expr(base).map(|r| r.num).unwrap_or_else(|_| Poly::one());
                extra = extra.mul(&p.powu(*k.numer() as u32));
                if !frac.is_zero() {
                    plain.push((a.clone(), frac));
                }
            }
            _ => plain.push((a, e)),
        }
    }
    if !exp_args.is_empty() {
        let mut total = RatFn::zero();
        for (arg, e) in &exp_args {
            if let Ok(r) = RatFn::from_expr(arg) {
                total = total.add(&r.scale(&Coeff::new((*e.numer()).into(), (*e.denom()).into())));
            }
        }
        if !total.is_zero() {
            plain.push((Atom::Exp(total.to_expr()), Exponent::one()));
            plain.sort_by(|x, y| x.0.cmp(&y.0));
        }
    }
    let base = Monomial(plain);
    extra.mul_term(&base, &Coeff::one())
}

/// `num / Π den_i^k_i` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatFn {
    num: Poly,
    den: Vec<(Poly, u32)>,
}

impl Default for RatFn {
    fn default() -> Self {
        RatFn::zero()
    }
}

impl RatFn {
    pub fn zero() -> Self {
        RatFn {
            num: Poly::zero(),
            den: Vec::new(),
        }
    }

    pub fn one() -> Self {
        RatFn::from_poly(Poly::one())
    }

    pub fn constant(c: Coeff) -> Self {
        RatFn::from_poly(Poly::constant(c))
    }

    pub fn int(n: i64) -> Self {
        RatFn::constant(super::coeff(n))
    }

    pub fn symbol(s: Symbol) -> Self {
        RatFn::from_atom(Atom::Sym(s))
    }

    pub fn from_atom(a: Atom) -> Self {
        RatFn::from_poly(Poly::term(Monomial::atom(a), Coeff::one()))
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFn {
            num: p,
            den: Vec::new(),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &[(Poly, u32)] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        if !self.den.is_empty() {
            return None;
        }
        let (m, c) = self.num.single_term()?;
        if c.is_one() && m.0.len() == 1 && m.0[0].1.is_one() {
            Some(&m.0[0].0)
        } else {
            None
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        self.as_atom().and_then(Atom::as_symbol)
    }

    /// Builds from a raw numerator and denominator, fixing fractional
    /// powers with negative exponent and cancelling exact factors.
    fn from_parts(num: Poly, den: Vec<(Poly, u32)>) -> RatFn {
        let needs_fix = num
            .0
            .keys()
            .any(|m| m.0.iter().any(|(a, e)| matches!(a, Atom::Root(_)) && *e < exp_zero()));
        let mut r = if needs_fix {
            let mut plain = Poly::zero();
            let mut acc = RatFn::zero();
            for (m, c) in num.0 {
                if m.0.iter().any(|(a, e)| matches!(a, Atom::Root(_)) && *e < exp_zero()) {
                    let mut keep = Vec::new();
                    let mut t = RatFn::one();
                    for (a, e) in m.0 {
                        match &a {
                            Atom::Root(base) if e < exp_zero() => {
                                let k = e.floor();
                                let frac = e - k;
                                if !frac.is_zero() {
                                    keep.push((a.clone(), frac));
                                }
                                let p = RatFn::from_expr(base).unwrap_or_else(|_| RatFn::one());
                                if let Ok(q) = p.powi(*k.numer()) {
                                    t = t.mul(&q);
                                }
                            }
                            _ => keep.push((a, e)),
                        }
                    }
                    t = t.mul(&RatFn::from_poly(Poly::term(Monomial(keep), c)));
                    acc = acc.add(&t);
                } else {
                    plain.add_term(m, c);
                }
            }
            acc.add(&RatFn::from_poly(plain)).mul(&RatFn { num: Poly::one(), den })
        } else {
            RatFn { num, den }
        };
        r.cancel();
        r
    }

    fn cancel(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        self.refine_den();
        for (f, k) in self.den.iter_mut() {
            while *k > 0 {
                match self.num.div_exact(f) {
                    Some(q) => {
                        self.num = q;
                        *k -= 1;
                    }
                    None => break,
                }
            }
        }
        self.den.retain(|(_, k)| *k > 0);
    }

    /// Rewrites denominator factors that are exact multiples of other
    /// factors, so that equal denominators get equal factorizations.
    fn refine_den(&mut self) {
        if self.den.len() < 2 {
            return;
        }
        'outer: loop {
            for i in 0..self.den.len() {
                for j in 0..self.den.len() {
                    if i == j {
                        continue;
                    }
                    if let Some(q) = self.den[j].0.div_exact(&self.den[i].0) {
                        let kj = self.den[j].1;
                        self.den[i].1 += kj;
                        if q.as_constant().is_some() {
                            self.den.remove(j);
                        } else {
                            self.den[j].0 = q;
                        }
                        let mut merged: BTreeMap<Poly, u32> = BTreeMap::new();
                        for (f, k) in self.den.drain(..) {
                            *merged.entry(f).or_insert(0) += k;
                        }
                        self.den = merged.into_iter().collect();
                        continue 'outer;
                    }
                }
            }
            return;
        }
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn scale(&self, k: &Coeff) -> RatFn {
        if k.is_zero() {
            return RatFn::zero();
        }
        RatFn {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            let mut r = RatFn {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            };
            if !r.den.is_empty() {
                r.cancel();
            }
            return r;
        }
        let mut lcm: BTreeMap<Poly, u32> = BTreeMap::new();
        for (f, k) in self.den.iter().chain(other.den.iter()) {
            let e = lcm.entry(f.clone()).or_insert(0);
            *e = (*e).max(*k);
        }
        let cofactor = |den: &[(Poly, u32)]| {
            let mut p = Poly::one();
            for (f, k) in &lcm {
                let have = den.iter().find(|(g, _)| g == f).map_or(0, |(_, j)| *j);
                if *k > have {
                    p = p.mul(&f.powu(k - have));
                }
            }
            p
        };
        let num = self
            .num
            .mul(&cofactor(&self.den))
            .add(&other.num.mul(&cofactor(&other.den)));
        let mut r = RatFn {
            num,
            den: lcm.into_iter().collect(),
        };
        r.cancel();
        r
    }

    pub fn sub(&self, other: &RatFn) -> RatFn {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        if self.is_zero() || other.is_zero() {
            return RatFn::zero();
        }
        let num = self.num.mul(&other.num);
        if self.den.is_empty() && other.den.is_empty() {
            return RatFn::from_parts(num, Vec::new());
        }
        let mut den: BTreeMap<Poly, u32> = BTreeMap::new();
        for (f, k) in self.den.iter().chain(other.den.iter()) {
            *den.entry(f.clone()).or_insert(0) += *k;
        }
        RatFn::from_parts(num, den.into_iter().collect())
    }

    pub fn inv(&self) -> Result<RatFn> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (c, m, q) = split_factor(&self.num);
        let mut num = Poly::term(m.inv(), Coeff::one() / c);
        for (f, k) in &self.den {
            num = num.mul(&f.powu(*k));
        }
        let den = if q.as_constant().is_some() {
            Vec::new()
        } else {
            vec![(q, 1)]
        };
        Ok(RatFn::from_parts(num, den))
    }

    pub fn div(&self, other: &RatFn) -> Result<RatFn> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn powi(&self, k: i64) -> Result<RatFn> {
        if k == 0 {
            return Ok(RatFn::one());
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut out = RatFn::one();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    pub fn pow(&self, e: Exponent) -> Result<RatFn> {
        if e.is_integer() {
            return self.powi(*e.numer());
        }
        if self.is_zero() {
            return if e > exp_zero() {
                Ok(RatFn::zero())
            } else {
                Err(Error::DivisionByZero)
            };
        }
        if self.den.is_empty() {
            if let Some((m, c)) = self.num.single_term() {
                if c.is_one() {
                    let mut p = Poly::zero();
                    p.push_canon(m.pow(e), Coeff::one());
                    return Ok(RatFn::from_parts(p, Vec::new()));
                }
            }
        }
        // (c m q)^e = c^e m^e q^e with q normalized so that equal bases
        // share one atom
        let (mut c, m, mut q) = split_factor(&self.num);
        // a negative constant moves into a radicand when one is available
        let mut flipped = None;
        if c.is_negative() {
            if q.as_constant().is_none() {
                c = -c;
                q = q.neg();
            } else if let Some(i) = self.den.iter().position(|(_, k)| k % 2 == 1) {
                c = -c;
                flipped = Some(i);
            }
        }
        let mut num = constant_pow(&c, e);
        if !m.is_one() {
            num = num.mul_term(&m.pow(e), &Coeff::one());
        }
        if q.as_constant().is_none() {
            num = num.mul_term(&Monomial::atom_pow(Atom::Root(q.to_expr()), e), &Coeff::one());
        }
        let mut out = RatFn::from_parts(num, Vec::new());
        for (i, (f, k)) in self.den.iter().enumerate() {
            let ek = -e * Exponent::from_integer(*k as i64);
            let base = if flipped == Some(i) { f.neg() } else { f.clone() };
            out = out.mul(&RatFn::from_parts(
                Poly::term(Monomial::atom_pow(Atom::Root(base.to_expr()), ek), Coeff::one()),
                Vec::new(),
            ));
        }
        // integer parts of Root exponents are expanded by the monomial rewrite
        let mut p = Poly::zero();
        for (m, c) in out.num.0.clone() {
            p.push_canon(m, c);
        }
        Ok(RatFn::from_parts(p, out.den))
    }

    /// Whether `pred` holds for some atom, searching inside arguments too.
    pub fn any_atom(&self, pred: &mut dyn FnMut(&Atom) -> bool) -> bool {
        let polys = std::iter::once(&self.num).chain(self.den.iter().map(|(f, _)| f));
        for p in polys {
            for m in p.0.keys() {
                for (a, _) in &m.0 {
                    if a.any_nested(pred) {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.any_atom(&mut |a| a.as_symbol() == Some(s))
    }

    /// All top-level atoms (numerator and denominator factors).
    pub fn atoms(&self) -> Vec<Atom> {
        let mut v = self.num.atoms();
        for (f, _) in &self.den {
            v.extend(f.atoms());
        }
        v.sort();
        v.dedup();
        v
    }

    pub fn to_expr(&self) -> Expr {
        let n = self.num.to_expr();
        if self.den.is_empty() {
            return n;
        }
        let mut factors = Vec::new();
        match n {
            Expr::Product(fs) => factors.extend(fs.iter().cloned()),
            Expr::Const(c) if c.is_one() => {}
            other => factors.push(other),
        }
        for (f, k) in &self.den {
            factors.push(Expr::Pow(Arc::new(f.to_expr()), -Exponent::from_integer(*k as i64)));
        }
        factors.sort();
        if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(Arc::new(factors))
        }
    }

    pub fn from_expr(e: &Expr) -> Result<RatFn> {
        Ok(match e {
            Expr::Const(c) => RatFn::constant(c.clone()),
            Expr::Sym(s) => RatFn::symbol(s.clone()),
            Expr::Sum(ts) => {
                let mut plain = Poly::zero();
                let mut acc = RatFn::zero();
                for t in ts.iter() {
                    let r = RatFn::from_expr(t)?;
                    if r.den.is_empty() {
                        plain = plain.add(&r.num);
                    } else {
                        acc = acc.add(&r);
                    }
                }
                acc.add(&RatFn::from_poly(plain))
            }
            Expr::Product(fs) => {
                let mut acc = RatFn::one();
                for f in fs.iter() {
                    acc = acc.mul(&RatFn::from_expr(f)?);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Expr::Pow(b, k) => RatFn::from_expr(b)?.pow(*k)?,
            Expr::Fn(f, a) => make_fn(*f, &RatFn::from_expr(a)?)?,
            Expr::UFn(u) => {
                let args = u
                    .args
                    .iter()
                    .map(|a| Ok(RatFn::from_expr(a)?.to_expr()))
                    .collect::<Result<Vec<_>>>()?;
                make_ufn(&u.name, u.deriv.clone(), args)
            }
        })
    }
}

/// `c^e`, exact when `c` is a positive rational with an exact root.
fn constant_pow(c: &Coeff, e: Exponent) -> Poly {
    if c.is_one() {
        return Poly::one();
    }
    let q = *e.denom() as u32;
    let root = |n: &BigInt| {
        let r = n.nth_root(q);
        (r.pow(q) == *n).then_some(r)
    };
    if c.is_positive() {
        if let (Some(a), Some(b)) = (root(c.numer()), root(c.denom())) {
            let r = Coeff::new(a, b);
            let k = *e.numer();
            let v = num_traits::pow(r, k.unsigned_abs() as usize);
            return Poly::constant(if k < 0 { Coeff::one() / v } else { v });
        }
    }
    Poly::term(
        Monomial::atom_pow(Atom::Root(Poly::constant(c.clone()).to_expr()), e),
        Coeff::one(),
    )
}

/// Splits `p = c · m · q` with `m` the monomial content, `q` having leading
/// coefficient one.
fn split_factor(p: &Poly) -> (Coeff, Monomial, Poly) {
    let m = p.content_monomial();
    let mut q = if m.is_one() {
        p.clone()
    } else {
        p.mul_term(&m.inv(), &Coeff::one())
    };
    let c = q.leading().map(|(_, c)| c.clone()).unwrap_or_else(Coeff::one);
    if !c.is_one() {
        q = q.scale(&(Coeff::one() / &c));
    }
    (c, m, q)
}

fn is_negative(r: &RatFn) -> bool {
    r.num.0.values().next().is_some_and(|c| c.is_negative())
}

pub fn make_ufn(name: &super::Name, deriv: Vec<u32>, args: Vec<Expr>) -> RatFn {
    RatFn::from_atom(Atom::UFn(Arc::new(UFnApp {
        name: name.clone(),
        deriv,
        args,
    })))
}

/// Applies an elementary function to a normalized argument.
pub fn make_fn(f: ElemFn, arg: &RatFn) -> Result<RatFn> {
    let a = || arg.to_expr();
    Ok(match f {
        ElemFn::Exp => {
            if arg.is_zero() {
                RatFn::one()
            } else if let Some(Atom::Fn(ElemFn::Log, inner)) = arg.as_atom() {
                RatFn::from_expr(inner)?
            } else {
                RatFn::from_atom(Atom::Exp(a()))
            }
        }
        ElemFn::Log => {
            if arg.is_one() {
                RatFn::zero()
            } else if arg.is_zero() {
                return Err(Error::Invalid("log(0)".into()));
            } else {
                RatFn::from_atom(Atom::Fn(ElemFn::Log, a()))
            }
        }
        ElemFn::Sin | ElemFn::Sinh => {
            if arg.is_zero() {
                RatFn::zero()
            } else if is_negative(arg) {
                make_fn(f, &arg.neg())?.neg()
            } else {
                RatFn::from_atom(Atom::Fn(f, a()))
            }
        }
        ElemFn::Cos | ElemFn::Cosh => {
            if arg.is_zero() {
                RatFn::one()
            } else if is_negative(arg) {
                make_fn(f, &arg.neg())?
            } else {
                RatFn::from_atom(Atom::Fn(f, a()))
            }
        }
        ElemFn::Tan => make_fn(ElemFn::Sin, arg)?.div(&make_fn(ElemFn::Cos, arg)?)?,
        ElemFn::Tanh => make_fn(ElemFn::Sinh, arg)?.div(&make_fn(ElemFn::Cosh, arg)?)?,
        ElemFn::Coth => make_fn(ElemFn::Cosh, arg)?.div(&make_fn(ElemFn::Sinh, arg)?)?,
    })
}

impl std::fmt::Display for RatFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}
