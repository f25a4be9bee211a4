//! Jet spaces, total derivatives and restriction to solved manifolds.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::constraint::linear_split;
use crate::expr::{derive, map_atoms, name, Atom, Derivation, Expr, JetCoord, Name, RatFn, Symbol};

/// `α = (α₁,…,αₙ)` over the independent variables of a [`JetSpace`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α + e_i`.
    pub fn raised(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    /// All indices of order exactly `k` in `n` variables, in lexicographic
    /// order.
    pub fn all_of_order(n: usize, k: u32) -> Vec<MultiIndex> {
        fn go(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == n {
                prefix.push(k);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=k).rev() {
                prefix.push(a);
                go(n, k - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            go(n, k, &mut Vec::new(), &mut out);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    pub indeps: Vec<Name>,
    pub deps: Vec<Name>,
    pub order: u32,
}

impl JetSpace {
    pub fn new(indeps: &[&str], deps: &[&str], order: u32) -> Result<Self> {
        let all: Vec<&&str> = indeps.iter().chain(deps).collect();
        let mut seen = HashSet::new();
        for n in &all {
            if !seen.insert(**n) {
                return Err(Error::Invalid(format!("`{n}` declared twice")));
            }
        }
        if order == 0 {
            return Err(Error::Invalid("jet order must be at least 1".into()));
        }
        Ok(JetSpace {
            indeps: indeps.iter().map(|s| name(s)).collect(),
            deps: deps.iter().map(|s| name(s)).collect(),
            order,
        })
    }

    pub fn n(&self) -> usize {
        self.indeps.len()
    }

    pub fn m(&self) -> usize {
        self.deps.len()
    }

    pub fn coord(&self, dep: usize, alpha: &MultiIndex) -> JetCoord {
        let mut c = JetCoord::new(&self.deps[dep]);
        for (i, k) in alpha.0.iter().enumerate() {
            for _ in 0..*k {
                c = c.differentiated(&self.indeps[i]);
            }
        }
        c
    }

    pub fn index_of(&self, c: &JetCoord) -> Option<(usize, MultiIndex)> {
        let a = self.deps.iter().position(|d| *d == c.dep)?;
        let mut alpha = MultiIndex::zero(self.n());
        for (v, k) in &c.derivs {
            let i = self.indeps.iter().position(|x| x == v)?;
            alpha.0[i] = *k;
        }
        Some((a, alpha))
    }

    pub fn indep_symbol(&self, i: usize) -> Symbol {
        Symbol::Indep(self.indeps[i].clone())
    }

    pub fn dep_symbol(&self, a: usize) -> Symbol {
        Symbol::Jet(JetCoord::new(&self.deps[a]))
    }
}

/// `D_x` for a single independent variable.
pub struct TotalDerivative(pub Name);

impl Derivation for TotalDerivative {
    fn leaf(&self, s: &Symbol) -> RatFn {
        match s {
            Symbol::Indep(n) if *n == self.0 => RatFn::one(),
            Symbol::Jet(c) => RatFn::symbol(Symbol::Jet(c.differentiated(&self.0))),
            _ => RatFn::zero(),
        }
    }
}

pub fn total_derivative_rat(r: &RatFn, var: &Name) -> RatFn {
    derive(r, &TotalDerivative(var.clone()))
}

/// `D_i e` for the `i`-th independent variable of `j`.
pub fn total_derivative(e: &Expr, i: usize, j: &JetSpace) -> Result<Expr> {
    let var = j
        .indeps
        .get(i)
        .ok_or_else(|| Error::Invalid(format!("axis {i} out of range")))?;
    Ok(total_derivative_rat(&RatFn::from_expr(e)?, var).to_expr())
}

/// `lhs = rhs` with `lhs` in solved position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub lhs: JetCoord,
    pub rhs: RatFn,
}

impl Equation {
    pub fn new(lhs: JetCoord, rhs: RatFn) -> Self {
        Equation { lhs, rhs }
    }

    /// `lhs − rhs`.
    pub fn residual(&self) -> RatFn {
        RatFn::symbol(Symbol::Jet(self.lhs.clone())).sub(&self.rhs)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", Symbol::Jet(self.lhs.clone()), self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdeSystem {
    pub id: String,
    pub space: JetSpace,
    pub equations: Vec<Equation>,
}

impl PdeSystem {
    /// Checks that solved coordinates are distinct and that substitution
    /// of the solved forms terminates.
    pub fn new(id: &str, space: JetSpace, equations: Vec<Equation>) -> Result<Self> {
        let mut seen = HashSet::new();
        for eq in &equations {
            if !seen.insert(eq.lhs.clone()) {
                return Err(Error::Invalid(format!(
                    "`{}` is solved for twice",
                    Symbol::Jet(eq.lhs.clone())
                )));
            }
            if space.index_of(&eq.lhs).is_none() {
                return Err(Error::Invalid(format!(
                    "`{}` is not a coordinate of the jet space",
                    Symbol::Jet(eq.lhs.clone())
                )));
            }
        }
        let sys = PdeSystem {
            id: id.to_string(),
            space,
            equations,
        };
        let rules = sys.rules();
        for eq in &sys.equations {
            rules.reduce(&eq.rhs)?;
        }
        Ok(sys)
    }

    pub fn rules(&self) -> RuleSet {
        let mut r = RuleSet::new(self.space.clone());
        for eq in &self.equations {
            r.push(eq.lhs.clone(), eq.rhs.clone(), RuleOrigin::L);
        }
        r
    }

    /// Substitutes solved coordinates and their differential consequences.
    pub fn restrict_to_l(&self, e: &RatFn) -> Result<RatFn> {
        self.rules().reduce(e)
    }

    pub fn restrict_to_l_expr(&self, e: &Expr) -> Result<Expr> {
        Ok(self.restrict_to_l(&RatFn::from_expr(e)?)?.to_expr())
    }
}

impl fmt::Display for PdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, eq) in self.equations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{eq}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleOrigin {
    /// From the characteristic system.
    M,
    /// From the PDE system.
    L,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetRule {
    pub lhs: JetCoord,
    pub rhs: RatFn,
    pub origin: RuleOrigin,
}

/// Ordered substitution rules on jet coordinates. A coordinate is rewritten
/// by the first rule whose left side it is a derivative of.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub space: JetSpace,
    rules: Vec<JetRule>,
}

impl RuleSet {
    pub fn new(space: JetSpace) -> Self {
        RuleSet {
            space,
            rules: Vec::new(),
        }
    }

    pub fn push(&mut self, lhs: JetCoord, rhs: RatFn, origin: RuleOrigin) {
        self.rules.push(JetRule { lhs, rhs, origin });
    }

    pub fn rules(&self) -> &[JetRule] {
        &self.rules
    }

    pub fn covers(&self, c: &JetCoord) -> bool {
        self.rules.iter().any(|r| c.excess_over(&r.lhs).is_some())
    }

    pub fn reduce(&self, r: &RatFn) -> Result<RatFn> {
        Reducer {
            set: self,
            cache: HashMap::new(),
            active: HashSet::new(),
        }
        .expr(r)
    }

    pub fn reduce_expr(&self, e: &Expr) -> Result<Expr> {
        Ok(self.reduce(&RatFn::from_expr(e)?)?.to_expr())
    }
}

struct Reducer<'a> {
    set: &'a RuleSet,
    cache: HashMap<JetCoord, RatFn>,
    active: HashSet<JetCoord>,
}

impl Reducer<'_> {
    fn coord(&mut self, c: &JetCoord) -> Result<Option<RatFn>> {
        if let Some(v) = self.cache.get(c) {
            return Ok(Some(v.clone()));
        }
        let Some((rule, excess)) = self
            .set
            .rules
            .iter()
            .find_map(|r| c.excess_over(&r.lhs).map(|ex| (r, ex)))
        else {
            return Ok(None);
        };
        if !self.active.insert(c.clone()) {
            return Err(Error::Cyclic(Symbol::Jet(c.clone()).to_string()));
        }
        let value = match excess.first() {
            None => self.expr(&rule.rhs)?,
            Some((v, _)) => {
                let prev = c.integrated(v).expect("excess variable is present");
                let base = self
                    .coord(&prev)?
                    .unwrap_or_else(|| RatFn::symbol(Symbol::Jet(prev.clone())));
                self.expr(&total_derivative_rat(&base, v))?
            }
        };
        self.active.remove(c);
        self.cache.insert(c.clone(), value.clone());
        Ok(Some(value))
    }

    fn expr(&mut self, r: &RatFn) -> Result<RatFn> {
        let mut err = None;
        let out = map_atoms(r, &mut |a| {
            if err.is_some() {
                return None;
            }
            let Atom::Sym(Symbol::Jet(c)) = a else { return None };
            match self.coord(c) {
                Ok(v) => v,
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
}

/// Rules for `M ∩ L`: the characteristic rules first, then the equations of
/// the system. An equation whose solved coordinate is already eliminated by
/// `M` is reduced and re-solved for its largest remaining linear coordinate.
pub fn intersection_rules(sys: &PdeSystem, m: &RuleSet) -> Result<RuleSet> {
    let mut set = m.clone();
    let mut displaced = Vec::new();
    for eq in &sys.equations {
        if m.covers(&eq.lhs) {
            displaced.push(eq);
        } else {
            set.push(eq.lhs.clone(), eq.rhs.clone(), RuleOrigin::L);
        }
    }
    for eq in displaced {
        let res = set.reduce(&eq.residual())?;
        if res.is_zero() {
            continue;
        }
        let mut cands: Vec<JetCoord> = res
            .atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Sym(Symbol::Jet(c)) if c.order() > 0 && !set.covers(&c) => Some(c),
                _ => None,
            })
            .collect();
        cands.sort_by(|a, b| (a.order(), a).cmp(&(b.order(), b)));
        let solved = cands.iter().rev().find_map(|c| {
            let (coef, rest) = linear_split(&res, &Atom::Sym(Symbol::Jet(c.clone())))?;
            let rhs = rest.neg().div(&coef).ok()?;
            Some((c.clone(), rhs))
        });
        match solved {
            Some((c, rhs)) => set.push(c, rhs, RuleOrigin::L),
            None => {
                return Err(Error::NotResolvable(format!(
                    "`{eq}` cannot be re-solved on the characteristic manifold"
                )))
            }
        }
    }
    Ok(set)
}
