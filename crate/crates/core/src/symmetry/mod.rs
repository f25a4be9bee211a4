//! Point vector fields on `(x, u)`-space and operations on families of them.

mod chart;
mod transform;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use chart::Chart;
pub use transform::{equivalent_mod_group, flow, pushforward, pushforward_family, FlowFn, PointTransformation};

use crate::error::{Error, Result};
use crate::expr::{derive, is_zero_seeded, ConstraintSet, Derivation, JetCoord, Name, RatFn, Symbol, ZeroTest};
use crate::jet::{total_derivative_rat, JetSpace, RuleOrigin, RuleSet};

/// `ξ^i ∂_{x_i} + η^a ∂_{u^a}`. Coefficients are stored sparsely, keyed by
/// the independent-variable symbol or the order-zero jet coordinate.
#[derive(Clone)]
pub struct VectorField {
    pub name: String,
    coeffs: BTreeMap<Symbol, RatFn>,
    flow: Option<FlowFn>,
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("coeffs", &self.coeffs)
            .field("flow", &self.flow.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn zero(name: &str) -> Self {
        VectorField {
            name: name.to_string(),
            coeffs: BTreeMap::new(),
            flow: None,
        }
    }

    /// Builds from `(coordinate, coefficient)` pairs; repeated coordinates
    /// add up.
    pub fn new(name: &str, parts: impl IntoIterator<Item = (Symbol, RatFn)>) -> Result<Self> {
        let mut v = VectorField::zero(name);
        for (s, c) in parts {
            match &s {
                Symbol::Indep(_) => {}
                Symbol::Jet(j) if j.order() == 0 => {}
                _ => return Err(Error::Invalid(format!("`{s}` is not a point coordinate"))),
            }
            let sum = v.coeff(&s).add(&c);
            v.set(s, sum);
        }
        Ok(v)
    }

    pub fn with_flow(mut self, f: FlowFn) -> Self {
        self.flow = Some(f);
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn has_flow(&self) -> bool {
        self.flow.is_some()
    }

    fn set(&mut self, s: Symbol, c: RatFn) {
        if c.is_zero() {
            self.coeffs.remove(&s);
        } else {
            self.coeffs.insert(s, c);
        }
    }

    pub fn coeff(&self, s: &Symbol) -> RatFn {
        self.coeffs.get(s).cloned().unwrap_or_default()
    }

    pub fn xi(&self, x: &str) -> RatFn {
        self.coeff(&Symbol::indep(x))
    }

    pub fn eta(&self, u: &str) -> RatFn {
        self.coeff(&Symbol::dep(u))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Symbol, &RatFn)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Whether no coefficient depends on `s` and `s` carries no coefficient.
    pub fn ignores(&self, s: &Symbol) -> bool {
        !self.coeffs.contains_key(s) && self.coeffs.values().all(|c| !c.contains_symbol(s))
    }

    pub fn scale(&self, k: &RatFn) -> VectorField {
        let mut out = VectorField::zero(&self.name);
        for (s, c) in &self.coeffs {
            out.set(s.clone(), c.mul(k));
        }
        out
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.flow = None;
        for (s, c) in &other.coeffs {
            let sum = out.coeff(s).add(c);
            out.set(s.clone(), sum);
        }
        out
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(&RatFn::int(-1)))
    }

    /// Applies `f` to every coefficient.
    pub fn map(&self, mut f: impl FnMut(&RatFn) -> Result<RatFn>) -> Result<VectorField> {
        let mut out = VectorField::zero(&self.name);
        for (s, c) in &self.coeffs {
            out.set(s.clone(), f(c)?);
        }
        Ok(out)
    }

    /// The field as a derivation on functions of `(x, u)`.
    pub fn apply(&self, r: &RatFn) -> RatFn {
        derive(r, &FieldAction(self))
    }

    /// Coefficients after reduction modulo constraints.
    pub fn reduced(&self, c: &ConstraintSet) -> Result<VectorField> {
        self.map(|r| c.apply(r))
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (i, (s, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})*d/d{s}")?;
        }
        Ok(())
    }
}

struct FieldAction<'a>(&'a VectorField);

impl Derivation for FieldAction<'_> {
    fn leaf(&self, s: &Symbol) -> RatFn {
        self.0.coeff(s)
    }
}

/// `[Q, P]` with coefficients `Q(P^k) − P(Q^k)`.
pub fn commutator(q: &VectorField, p: &VectorField) -> VectorField {
    let mut out = VectorField::zero(&format!("[{}, {}]", q.name, p.name));
    let keys: Vec<Symbol> = q.coeffs.keys().chain(p.coeffs.keys()).cloned().collect();
    for k in keys {
        if out.coeffs.contains_key(&k) {
            continue;
        }
        let c = q.apply(&p.coeff(&k)).sub(&p.apply(&q.coeff(&k)));
        out.set(k, c);
    }
    out
}

/// `Q_{(r)}` acting on jet functions. Coefficients of higher jet
/// coordinates follow `η^{aα} = D^α(η^a − ξ^i u^a_i) + ξ^i u^a_{α,i}` and
/// are generated on demand.
pub struct Prolongation<'a> {
    field: &'a VectorField,
    space: &'a JetSpace,
    char_derivs: RefCell<HashMap<JetCoord, RatFn>>,
    coeffs: RefCell<HashMap<JetCoord, RatFn>>,
}

impl<'a> Prolongation<'a> {
    pub fn new(field: &'a VectorField, space: &'a JetSpace) -> Self {
        Prolongation {
            field,
            space,
            char_derivs: RefCell::new(HashMap::new()),
            coeffs: RefCell::new(HashMap::new()),
        }
    }

    /// `D^α(η^a − ξ^i u^a_i)` for `c = u^a_α`.
    fn char_deriv(&self, c: &JetCoord) -> RatFn {
        if let Some(v) = self.char_derivs.borrow().get(c) {
            return v.clone();
        }
        let v = match c.derivs.first() {
            None => {
                let mut w = self.field.coeff(&Symbol::Jet(c.clone()));
                for x in &self.space.indeps {
                    let xi = self.field.coeff(&Symbol::Indep(x.clone()));
                    if !xi.is_zero() {
                        w = w.sub(&xi.mul(&RatFn::symbol(Symbol::Jet(c.differentiated(x)))));
                    }
                }
                w
            }
            Some((x, _)) => {
                let prev = c.integrated(x).expect("present");
                total_derivative_rat(&self.char_deriv(&prev), x)
            }
        };
        self.char_derivs.borrow_mut().insert(c.clone(), v.clone());
        v
    }

    pub fn coefficient(&self, c: &JetCoord) -> RatFn {
        if c.order() == 0 {
            return self.field.coeff(&Symbol::Jet(c.clone()));
        }
        if let Some(v) = self.coeffs.borrow().get(c) {
            return v.clone();
        }
        let mut v = self.char_deriv(c);
        for x in &self.space.indeps {
            let xi = self.field.coeff(&Symbol::Indep(x.clone()));
            if !xi.is_zero() {
                v = v.add(&xi.mul(&RatFn::symbol(Symbol::Jet(c.differentiated(x)))));
            }
        }
        self.coeffs.borrow_mut().insert(c.clone(), v.clone());
        v
    }

    pub fn apply(&self, r: &RatFn) -> RatFn {
        derive(r, self)
    }
}

impl Derivation for Prolongation<'_> {
    fn leaf(&self, s: &Symbol) -> RatFn {
        match s {
            Symbol::Jet(c) => self.coefficient(c),
            other => self.field.coeff(other),
        }
    }
}

/// Every prolonged coefficient `η^{aα}` with `|α| ≤ r`.
pub fn prolong(q: &VectorField, r: u32, space: &JetSpace) -> BTreeMap<JetCoord, RatFn> {
    let p = Prolongation::new(q, space);
    let mut out = BTreeMap::new();
    for a in 0..space.m() {
        for k in 0..=r {
            for alpha in crate::jet::MultiIndex::all_of_order(space.n(), k) {
                let c = space.coord(a, &alpha);
                out.insert(c.clone(), p.coefficient(&c));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorFamily {
    pub name: String,
    pub members: Vec<VectorField>,
}

impl OperatorFamily {
    pub fn new(name: &str, members: Vec<VectorField>) -> Self {
        OperatorFamily {
            name: name.to_string(),
            members,
        }
    }

    pub fn single(q: VectorField) -> Self {
        OperatorFamily {
            name: q.name.clone(),
            members: vec![q],
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Q̃^s = λ^{sp} Q^p`.
    pub fn mixed(&self, lambda: &[Vec<RatFn>]) -> OperatorFamily {
        let members = lambda
            .iter()
            .enumerate()
            .map(|(s, row)| {
                row.iter()
                    .zip(&self.members)
                    .fold(VectorField::zero(&format!("{}~{s}", self.name)), |acc, (l, q)| {
                        acc.add(&q.scale(l))
                    })
            })
            .collect();
        OperatorFamily {
            name: format!("{}~", self.name),
            members,
        }
    }
}

/// Result of Gaussian elimination on the `ξ`-matrix of a family.
struct Elimination {
    /// Members with `ξ^{pivot_s} = δ^{ss'}`.
    basis: Vec<VectorField>,
    pivots: Vec<Name>,
    /// `basis_s = transform[s][q] · member_q`.
    transform: Vec<Vec<RatFn>>,
}

fn pivot_rank(r: &RatFn) -> u8 {
    if r.as_constant().is_some() {
        0
    } else if r.den().is_empty() && r.num().len() == 1 {
        1
    } else {
        2
    }
}

fn eliminate(f: &OperatorFamily, indeps: &[Name], chart: Option<&Chart>) -> Result<Elimination> {
    let l = f.len();
    let mut rows: Vec<VectorField> = f.members.clone();
    let mut transform: Vec<Vec<RatFn>> = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| if i == j { RatFn::one() } else { RatFn::zero() })
                .collect()
        })
        .collect();
    let mut pivots: Vec<Name> = Vec::new();
    for s in 0..l {
        let mut best: Option<(u8, usize, usize)> = None;
        for (row, r) in rows.iter().enumerate().skip(s) {
            for (ci, x) in indeps.iter().enumerate() {
                if pivots.contains(x) {
                    continue;
                }
                let e = r.coeff(&Symbol::Indep(x.clone()));
                if e.is_zero() {
                    continue;
                }
                if let Some(ch) = chart {
                    if !ch.is_nonvanishing(&e) {
                        continue;
                    }
                }
                let key = (pivot_rank(&e), row, ci);
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
        }
        let Some((_, row, ci)) = best else {
            return Err(match chart {
                Some(_) => Error::Chart(format!(
                    "no invertible pivot on the chart for member {} of `{}`",
                    s + 1,
                    f.name
                )),
                None => Error::Rank(format!("`{}` has rank below {l}", f.name)),
            });
        };
        rows.swap(s, row);
        transform.swap(s, row);
        let x = indeps[ci].clone();
        let piv = rows[s].coeff(&Symbol::Indep(x.clone()));
        let inv = piv.inv()?;
        rows[s] = rows[s].scale(&inv);
        transform[s] = transform[s].iter().map(|t| t.mul(&inv)).collect();
        for o in 0..l {
            if o == s {
                continue;
            }
            let k = rows[o].coeff(&Symbol::Indep(x.clone()));
            if k.is_zero() {
                continue;
            }
            rows[o] = rows[o].sub(&rows[s].scale(&k));
            let ts = transform[s].clone();
            transform[o] = transform[o].iter().zip(&ts).map(|(a, b)| a.sub(&b.mul(&k))).collect();
        }
        pivots.push(x);
    }
    for (s, r) in rows.iter_mut().enumerate() {
        r.name = format!("{}^{}", f.name, s + 1);
    }
    Ok(Elimination {
        basis: rows,
        pivots,
        transform,
    })
}

fn vanishes(r: &RatFn, c: &ConstraintSet) -> Result<bool> {
    Ok(matches!(
        is_zero_seeded(r, c, crate::expr::DEFAULT_SEED)?,
        ZeroTest::Zero
    ))
}

/// `v − Σ v^{pivot_s} basis_s`, which vanishes iff `v` is in the span.
fn span_residual(v: &VectorField, e: &Elimination) -> VectorField {
    let mut r = v.clone();
    for (b, x) in e.basis.iter().zip(&e.pivots) {
        let k = r.coeff(&Symbol::Indep(x.clone()));
        if !k.is_zero() {
            r = r.sub(&b.scale(&k));
        }
    }
    r
}

fn field_vanishes(v: &VectorField, c: &ConstraintSet) -> Result<bool> {
    for (_, k) in v.coeffs() {
        if !vanishes(k, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Structure functions `ζ^{sps'}` with `[Q^s, Q^p] = ζ^{sps'} Q^{s'}`,
/// keyed by `(s, p)` for `s < p`.
pub type Zeta = BTreeMap<(usize, usize), Vec<RatFn>>;

/// `Some(ζ)` when the family is involutive.
pub fn is_involutive(f: &OperatorFamily, indeps: &[Name], c: &ConstraintSet) -> Result<Option<Zeta>> {
    let e = eliminate(f, indeps, None)?;
    let l = f.len();
    let mut zeta = Zeta::new();
    for s in 0..l {
        for p in s + 1..l {
            let com = commutator(&f.members[s], &f.members[p]);
            let coords: Vec<RatFn> = e.pivots.iter().map(|x| com.coeff(&Symbol::Indep(x.clone()))).collect();
            let res = span_residual(&com, &e);
            if !field_vanishes(&res, c)? {
                return Ok(None);
            }
            let z: Vec<RatFn> = (0..l)
                .map(|q| {
                    coords
                        .iter()
                        .zip(&e.transform)
                        .fold(RatFn::zero(), |acc, (ck, row)| acc.add(&ck.mul(&row[q])))
                })
                .collect();
            zeta.insert((s, p), z);
        }
    }
    Ok(Some(zeta))
}

/// Whether the families span the same module over functions of `(x, u)`.
pub fn equivalent_families(f: &OperatorFamily, g: &OperatorFamily, indeps: &[Name], c: &ConstraintSet) -> Result<bool> {
    if f.len() != g.len() {
        return Ok(false);
    }
    let ef = eliminate(f, indeps, None)?;
    let eg = eliminate(g, indeps, None)?;
    for q in &g.members {
        if !field_vanishes(&span_residual(q, &ef), c)? {
            return Ok(false);
        }
    }
    for q in &f.members {
        if !field_vanishes(&span_residual(q, &eg), c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Canonical {
    pub family: OperatorFamily,
    /// Independent variable normalized in each member.
    pub pivots: Vec<Name>,
}

/// Equivalent family with `ξ^{s, pivot_{s'}} = δ^{ss'}`, pivots chosen among
/// coefficients the chart declares nonvanishing.
pub fn canonicalize(f: &OperatorFamily, indeps: &[Name], chart: &Chart) -> Result<Canonical> {
    let e = eliminate(f, indeps, Some(chart))?;
    for s in 0..e.basis.len() {
        for p in s + 1..e.basis.len() {
            let com = commutator(&e.basis[s], &e.basis[p]);
            if !field_vanishes(&com, &ConstraintSet::new())? {
                return Err(Error::Invalid(format!(
                    "canonical members {} and {} of `{}` do not commute",
                    s + 1,
                    p + 1,
                    f.name
                )));
            }
        }
    }
    Ok(Canonical {
        family: OperatorFamily::new(&f.name, e.basis),
        pivots: e.pivots,
    })
}

/// Characteristic rules `u^a_{x_s} → η̂^{sa} − Σ_ν ξ̂^{sν} u^a_{x_ν}` of a
/// canonical family.
pub fn characteristic_rules(c: &Canonical, space: &JetSpace) -> Result<RuleSet> {
    let mut set = RuleSet::new(space.clone());
    for (q, x) in c.family.members.iter().zip(&c.pivots) {
        if !q.xi(x).is_one() {
            return Err(Error::Chart(format!("`{}` is not in canonical form", q.name)));
        }
        for u in &space.deps {
            let mut rhs = q.eta(u);
            for y in &space.indeps {
                if y == x {
                    continue;
                }
                let xi = q.xi(y);
                if !xi.is_zero() {
                    rhs = rhs.sub(&xi.mul(&RatFn::symbol(Symbol::Jet(JetCoord::new(u).differentiated(y)))));
                }
            }
            set.push(JetCoord::new(u).differentiated(x), rhs, RuleOrigin::M);
        }
    }
    Ok(set)
}

/// Names of a jet space's independent variables, for the family helpers.
pub fn indeps_of(space: &JetSpace) -> Vec<Name> {
    space.indeps.clone()
}

#[cfg(test)]
mod tests;
