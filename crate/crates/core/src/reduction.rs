//! Changes of independent variables, ansatz substitution and reduced
//! systems.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::expr::canon::make_fn;
use crate::expr::constraint::linear_split;
use crate::expr::{
    derive, is_zero_seeded, map_atoms, name, substitute, Atom, ConstraintSet, ElemFn, Expr, JetCoord, Monomial, Name,
    Partial, Poly, RatFn, Symbol, ZeroTest, DEFAULT_SEED,
};
use crate::jet::{total_derivative_rat, Equation, JetSpace, PdeSystem};
use crate::symmetry::Chart;

type Matrix = Vec<Vec<RatFn>>;

/// Invertible change of the independent variables `x → y`.
///
/// `forward` gives old variables in terms of new ones; old variables it
/// omits are kept under the same name. `inverse` rewrites new-chart atoms
/// (symbols or function applications) in old variables.
#[derive(Clone, Debug)]
pub struct CoordinateChange {
    pub old: Vec<Name>,
    pub new: Vec<Name>,
    forward: BTreeMap<Symbol, RatFn>,
    inverse: Vec<(Expr, Expr)>,
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

/// Gauss-Jordan inverse over rational functions.
fn invert(m: &Matrix) -> Result<Matrix> {
    let n = m.len();
    let mut a: Matrix = m.clone();
    let mut inv: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { RatFn::one() } else { RatFn::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .min_by_key(|&r| pivot_rank(&a[r][col]))
            .ok_or_else(|| Error::Rank("coordinate change has a singular Jacobian".into()))?;
        a.swap(col, p);
        inv.swap(col, p);
        let piv = a[col][col].inv()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&piv);
            inv[col][j] = inv[col][j].mul(&piv);
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].sub(&f.mul(&a[col][j]));
                inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    Ok(inv)
}

impl CoordinateChange {
    pub fn new(
        old: &[&str],
        new: &[&str],
        forward: BTreeMap<Symbol, RatFn>,
        inverse: Vec<(Expr, Expr)>,
    ) -> Result<Self> {
        if old.len() != new.len() {
            return Err(Error::Invalid("coordinate charts differ in dimension".into()));
        }
        let old: Vec<Name> = old.iter().map(|s| name(s)).collect();
        let new: Vec<Name> = new.iter().map(|s| name(s)).collect();
        for k in forward.keys() {
            if !matches!(k, Symbol::Indep(x) if old.contains(x)) {
                return Err(Error::Invalid(format!("`{k}` is not an old independent variable")));
            }
        }
        for x in &old {
            if !forward.contains_key(&Symbol::Indep(x.clone())) && !new.contains(x) {
                return Err(Error::Invalid(format!("`{x}` has no image in the new chart")));
            }
        }
        Ok(CoordinateChange {
            old,
            new,
            forward,
            inverse,
        })
    }

    pub fn identity(names: &[&str]) -> Self {
        let n: Vec<Name> = names.iter().map(|s| name(s)).collect();
        CoordinateChange {
            old: n.clone(),
            new: n,
            forward: BTreeMap::new(),
            inverse: Vec::new(),
        }
    }

    /// `a = r cos θ`, `b = r sin θ`; the other variables are kept.
    pub fn polar(indeps: &[&str], a: &str, b: &str, r: &str, theta: &str) -> Result<Self> {
        let new: Vec<&str> = indeps
            .iter()
            .map(|x| {
                if *x == a {
                    r
                } else if *x == b {
                    theta
                } else {
                    x
                }
            })
            .collect();
        let rr = Expr::indep(r);
        let th = Expr::indep(theta);
        let mut forward = BTreeMap::new();
        forward.insert(
            Symbol::indep(a),
            RatFn::from_expr(&(rr.clone() * Expr::func(ElemFn::Cos, th.clone())))?,
        );
        forward.insert(
            Symbol::indep(b),
            RatFn::from_expr(&(rr.clone() * Expr::func(ElemFn::Sin, th.clone())))?,
        );
        let rho = (Expr::indep(a).powi(2) + Expr::indep(b).powi(2)).pow(crate::expr::Exponent::new(1, 2));
        let inverse = vec![
            (rr, rho.clone()),
            (Expr::func(ElemFn::Cos, th.clone()), Expr::indep(a) / rho.clone()),
            (Expr::func(ElemFn::Sin, th), Expr::indep(b) / rho),
        ];
        CoordinateChange::new(indeps, &new, forward, inverse)
    }

    /// The old variable `x` as a function of the new ones.
    pub fn old_in_new(&self, x: &Name) -> RatFn {
        self.forward
            .get(&Symbol::Indep(x.clone()))
            .cloned()
            .unwrap_or_else(|| RatFn::symbol(Symbol::Indep(x.clone())))
    }

    /// `J[i][j] = ∂x_i/∂y_j` in the new chart.
    pub fn jacobian(&self) -> Matrix {
        self.old
            .iter()
            .map(|x| {
                let xi = self.old_in_new(x);
                self.new
                    .iter()
                    .map(|y| derive(&xi, &Partial(Symbol::Indep(y.clone()))))
                    .collect()
            })
            .collect()
    }

    /// `A[j][i] = ∂y_j/∂x_i` in the new chart.
    pub fn inverse_jacobian(&self) -> Result<Matrix> {
        invert(&self.jacobian())
    }

    /// Rewrites new-chart atoms in old variables.
    pub fn rewrite_old(&self, r: &RatFn) -> Result<RatFn> {
        if self.inverse.is_empty() {
            return Ok(r.clone());
        }
        RatFn::from_expr(&substitute(&r.to_expr(), &self.inverse)?)
    }

    /// Old-chart expression (including jet coordinates) in the new chart.
    pub fn to_new(&self, r: &RatFn) -> Result<RatFn> {
        let a = self.inverse_jacobian()?;
        let mut images: HashMap<JetCoord, RatFn> = HashMap::new();
        let mut memo = |c: &JetCoord| -> RatFn { jet_image(c, &self.old, &self.new, &a, &mut images) };
        let syms: BTreeMap<Symbol, RatFn> = self
            .old
            .iter()
            .map(|x| (Symbol::Indep(x.clone()), self.old_in_new(x)))
            .collect();
        map_atoms(r, &mut |atom| match atom {
            Atom::Sym(Symbol::Jet(c)) if c.order() > 0 => Some(memo(c)),
            Atom::Sym(s @ Symbol::Indep(_)) => syms.get(s).cloned(),
            _ => None,
        })
    }

    /// New-chart expression (including jet coordinates) in the old chart.
    pub fn to_old(&self, r: &RatFn) -> Result<RatFn> {
        let j = self.jacobian();
        let back: Matrix = j
            .iter()
            .map(|row| row.iter().map(|e| self.rewrite_old(e)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let mut images: HashMap<JetCoord, RatFn> = HashMap::new();
        let mapped = map_atoms(r, &mut |atom| match atom {
            Atom::Sym(Symbol::Jet(c)) if c.order() > 0 => Some(jet_image(c, &self.new, &self.old, &back, &mut images)),
            _ => None,
        })?;
        self.rewrite_old(&mapped)
    }
}

/// Image of a jet coordinate over `from` variables as an expression over
/// `to` variables, with `m[k][i] = ∂to_k/∂from_i`.
fn jet_image(c: &JetCoord, from: &[Name], to: &[Name], m: &Matrix, memo: &mut HashMap<JetCoord, RatFn>) -> RatFn {
    if c.order() == 0 {
        return RatFn::symbol(Symbol::Jet(c.clone()));
    }
    if let Some(v) = memo.get(c) {
        return v.clone();
    }
    let (var, _) = c.derivs[0].clone();
    let prev = c.integrated(&var).expect("variable occurs");
    let base = jet_image(&prev, from, to, m, memo);
    let i = from.iter().position(|x| *x == var);
    let out = match i {
        None => RatFn::symbol(Symbol::Jet(c.clone())),
        Some(i) => (0..to.len()).fold(RatFn::zero(), |acc, k| {
            if m[k][i].is_zero() {
                acc
            } else {
                acc.add(&m[k][i].mul(&total_derivative_rat(&base, &to[k])))
            }
        }),
    };
    memo.insert(c.clone(), out.clone());
    out
}

/// Rewrites each equation in the new chart and re-solves it for the image
/// of its solved coordinate.
pub fn change_coordinates(sys: &PdeSystem, cc: &CoordinateChange) -> Result<PdeSystem> {
    if cc.old != sys.space.indeps {
        return Err(Error::Invalid(format!(
            "chart does not match the variables of `{}`",
            sys.id
        )));
    }
    let new_names: Vec<&str> = cc.new.iter().map(|s| &**s).collect();
    let dep_names: Vec<&str> = sys.space.deps.iter().map(|s| &**s).collect();
    let space = JetSpace::new(&new_names, &dep_names, sys.space.order)?;
    let mut eqs = Vec::new();
    for eq in &sys.equations {
        let res = cc.to_new(&eq.residual())?;
        let kept = eq
            .lhs
            .derivs
            .iter()
            .all(|(x, _)| cc.new.contains(x) && !cc.forward.contains_key(&Symbol::Indep(x.clone())));
        let mut cands: Vec<JetCoord> = res
            .atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Sym(Symbol::Jet(c)) if c.order() > 0 => Some(c),
                _ => None,
            })
            .collect();
        cands.sort_by(|a, b| (a.order(), a).cmp(&(b.order(), b)));
        if kept {
            cands.retain(|c| *c == eq.lhs);
        }
        let solved = cands.iter().rev().find_map(|c| {
            let (coef, rest) = linear_split(&res, &Atom::Sym(Symbol::Jet(c.clone())))?;
            Some((c.clone(), rest.neg().div(&coef).ok()?))
        });
        match solved {
            Some((c, rhs)) => eqs.push(Equation::new(c, rhs)),
            None => return Err(Error::NotResolvable(format!("`{eq}` in the new chart"))),
        }
    }
    PdeSystem::new(&sys.id, space, eqs)
}

/// Substitution `u^a = F^a(x, v, …)` with the unknowns `v` functions of the
/// retained variables `omega` only.
#[derive(Clone, Debug)]
pub struct Ansatz {
    pub name: String,
    pub omega: Vec<Name>,
    pub unknowns: Vec<Name>,
    pub substitution: BTreeMap<Name, RatFn>,
    pub constraints: ConstraintSet,
    pub chart: Chart,
}

impl Ansatz {
    pub fn new(name: &str, omega: &[&str], unknowns: &[&str]) -> Self {
        Ansatz {
            name: name.to_string(),
            omega: omega.iter().map(|s| crate::expr::name(s)).collect(),
            unknowns: unknowns.iter().map(|s| crate::expr::name(s)).collect(),
            substitution: BTreeMap::new(),
            constraints: ConstraintSet::new(),
            chart: Chart::new(),
        }
    }

    pub fn set(mut self, dep: &str, f: RatFn) -> Self {
        self.substitution.insert(name(dep), f);
        self
    }

    pub fn with_constraints(mut self, c: ConstraintSet) -> Self {
        self.constraints = c;
        self
    }

    pub fn with_chart(mut self, c: Chart) -> Self {
        self.chart = c;
        self
    }

    fn is_unknown(&self, a: &Atom) -> bool {
        matches!(a, Atom::UFn(u) if self.unknowns.contains(&u.name))
    }

    /// Checks that every unknown depends on the retained variables only.
    fn validate(&self, sys: &PdeSystem) -> Result<()> {
        for x in &self.omega {
            if !sys.space.indeps.contains(x) {
                return Err(Error::Ansatz(format!("`{x}` is not a variable of `{}`", sys.id)));
            }
        }
        for dep in &sys.space.deps {
            if !self.substitution.contains_key(dep) {
                return Err(Error::Ansatz(format!("no substitution for `{dep}`")));
            }
        }
        let mut bad = None;
        for f in self.substitution.values() {
            f.any_atom(&mut |a| {
                if let Atom::UFn(u) = a {
                    if self.unknowns.contains(&u.name) {
                        for arg in &u.args {
                            let ok = matches!(arg, Expr::Sym(Symbol::Indep(x)) if self.omega.contains(x));
                            if !ok {
                                bad = Some(u.name.to_string());
                            }
                        }
                    }
                }
                false
            });
        }
        match bad {
            Some(n) => Err(Error::Ansatz(format!(
                "`{n}` must be applied to the retained variables"
            ))),
            None => Ok(()),
        }
    }
}

/// One reduced equation with the factor divided out of the raw residual.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduced {
    pub equation: RatFn,
    pub factor: RatFn,
}

/// Splits `r` as `factor · s` where `s` is free of the eliminated
/// variables, grouping terms by their monomial in the unknowns.
fn split_factor(r: &RatFn, a: &Ansatz, eliminated: &[Name]) -> Result<Reduced> {
    if r.is_zero() {
        return Ok(Reduced {
            equation: RatFn::zero(),
            factor: RatFn::one(),
        });
    }
    let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
    for (m, k) in r.num().terms() {
        let (v, rest) = m.split(|x| a.is_unknown(x));
        let slot = groups.entry(v).or_insert_with(Poly::zero);
        *slot = slot.add(&Poly::term(rest, k.clone()));
    }
    let lead = groups
        .values()
        .find(|p| a.chart.is_nonvanishing(&RatFn::from_poly((*p).clone())))
        .or_else(|| groups.values().next())
        .cloned()
        .expect("nonzero residual has a term");
    let lead = RatFn::from_poly(lead);
    let mut s = RatFn::zero();
    for (m, p) in &groups {
        let k = RatFn::from_poly(p.clone()).div(&lead)?;
        s = s.add(&k.mul(&RatFn::from_poly(Poly::term(m.clone(), crate::expr::coeff(1)))));
    }
    for x in eliminated {
        if s.contains_symbol(&Symbol::Indep(x.clone())) {
            return Err(Error::Ansatz(format!(
                "`{}` is not eliminated from `{s}` by `{}`",
                x, a.name
            )));
        }
    }
    Ok(Reduced {
        equation: s,
        factor: lead.mul(&r.div(&RatFn::from_poly(r.num().clone()))?),
    })
}

/// Substitutes the ansatz into every equation and returns the reduced
/// residuals in the unknowns.
pub fn apply_ansatz(sys: &PdeSystem, a: &Ansatz) -> Result<Vec<Reduced>> {
    a.validate(sys)?;
    let eliminated: Vec<Name> = sys
        .space
        .indeps
        .iter()
        .filter(|x| !a.omega.contains(x))
        .cloned()
        .collect();
    let mut cache: HashMap<JetCoord, RatFn> = HashMap::new();
    fn image(c: &JetCoord, a: &Ansatz, cache: &mut HashMap<JetCoord, RatFn>) -> RatFn {
        if let Some(v) = cache.get(c) {
            return v.clone();
        }
        let out = match c.derivs.first() {
            None => a.substitution[&c.dep].clone(),
            Some((x, _)) => {
                let prev = c.integrated(x).expect("variable occurs");
                derive(&image(&prev, a, cache), &Partial(Symbol::Indep(x.clone())))
            }
        };
        cache.insert(c.clone(), out.clone());
        out
    }
    let mut out = Vec::new();
    for eq in &sys.equations {
        let r = map_atoms(&eq.residual(), &mut |atom| match atom {
            Atom::Sym(Symbol::Jet(c)) => Some(image(c, a, &mut cache)),
            _ => None,
        })?;
        let r = a.constraints.apply(&r)?;
        out.push(split_factor(&r, a, &eliminated)?);
    }
    Ok(out)
}

/// Whether the reduced residuals match `expected` up to ordering and
/// factors declared nonvanishing on the ansatz chart.
pub fn verify_reduction(sys: &PdeSystem, a: &Ansatz, expected: &[RatFn]) -> Result<bool> {
    let got: Vec<RatFn> = apply_ansatz(sys, a)?
        .into_iter()
        .map(|r| r.equation)
        .filter(|e| !e.is_zero())
        .collect();
    if got.len() != expected.len() {
        return Ok(false);
    }
    let mut used = vec![false; got.len()];
    'next: for e in expected {
        if e.is_zero() {
            return Ok(false);
        }
        for (i, g) in got.iter().enumerate() {
            if used[i] {
                continue;
            }
            let q = g.div(e)?;
            if a.chart.is_nonvanishing(&q) {
                used[i] = true;
                continue 'next;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhiFamily {
    A,
    B,
    C,
    D,
}

impl PhiFamily {
    pub const ALL: [PhiFamily; 4] = [PhiFamily::A, PhiFamily::B, PhiFamily::C, PhiFamily::D];

    pub fn id(self) -> &'static str {
        match self {
            PhiFamily::A => "a",
            PhiFamily::B => "b",
            PhiFamily::C => "c",
            PhiFamily::D => "d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PhiFamily::ALL.into_iter().find(|f| f.id() == s)
    }
}

/// Closed-form solution of `φ_θθ + 2φφ_θ = 0` with `λ = −φ_θ − φ²` and the
/// factor `Φ` with `Φ_θ = φΦ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiSolution {
    pub family: PhiFamily,
    pub phi: RatFn,
    pub lambda: RatFn,
    pub factor: RatFn,
    /// The three identities, each certified zero.
    pub certificates: Vec<(String, RatFn)>,
}

pub fn theta() -> Symbol {
    Symbol::indep("theta")
}

/// `φ`, `λ` and `Φ` for one family, certified on construction. `kappa` is
/// unused for family `d`.
pub fn phi_family(family: PhiFamily, kappa: &RatFn) -> Result<PhiSolution> {
    if family != PhiFamily::D && kappa.is_zero() {
        return Err(Error::Invalid("kappa must be nonzero".into()));
    }
    let th = RatFn::symbol(theta());
    let kt = kappa.mul(&th);
    let k2 = kappa.mul(kappa);
    let (phi, lambda, factor) = match family {
        PhiFamily::A => (
            kappa.mul(&make_fn(ElemFn::Tan, &kt)?).neg(),
            k2,
            make_fn(ElemFn::Cos, &kt)?,
        ),
        PhiFamily::B => (
            kappa.mul(&make_fn(ElemFn::Tanh, &kt)?),
            k2.neg(),
            make_fn(ElemFn::Cosh, &kt)?,
        ),
        PhiFamily::C => (
            kappa.mul(&make_fn(ElemFn::Coth, &kt)?),
            k2.neg(),
            make_fn(ElemFn::Sinh, &kt)?,
        ),
        PhiFamily::D => (th.inv()?, RatFn::zero(), th.clone()),
    };
    let d = |r: &RatFn| derive(r, &Partial(theta()));
    let phi_t = d(&phi);
    let certificates = vec![
        (
            "phi_tt + 2 phi phi_t".to_string(),
            d(&phi_t).add(&phi.mul(&phi_t).scale(&crate::expr::coeff(2))),
        ),
        ("Phi_t - phi Phi".to_string(), d(&factor).sub(&phi.mul(&factor))),
        (
            "lambda + phi_t + phi^2".to_string(),
            lambda.add(&phi_t).add(&phi.mul(&phi)),
        ),
    ];
    for (what, r) in &certificates {
        if let ZeroTest::NonZero { .. } = is_zero_seeded(r, &ConstraintSet::new(), DEFAULT_SEED)? {
            return Err(Error::Certification(format!("family {}: {what} = {r}", family.id())));
        }
    }
    Ok(PhiSolution {
        family,
        phi,
        lambda,
        factor,
        certificates,
    })
}
