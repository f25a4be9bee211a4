//! Side relations on undetermined functions, oriented as rewrite rules.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::canon::{Atom, RatFn};
use super::diff::{derive, Partial};
use super::subst::{map_atoms, substitute_symbols};
use super::{Expr, Name, Symbol};
use crate::error::{Error, Result};

/// `name_{pattern}(formals) → rhs`, where `rhs` is written in the formal
/// arguments. Any derivative of the pattern is rewritten by differentiating
/// `rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub function: Name,
    pub formals: Vec<Symbol>,
    pub pattern: Vec<u32>,
    pub rhs: RatFn,
}

impl Rule {
    pub fn lhs_expr(&self) -> Expr {
        Expr::ufn_deriv(
            &self.function,
            self.pattern.clone(),
            self.formals.iter().cloned().map(Expr::Sym).collect(),
        )
    }

    fn excess(&self, deriv: &[u32]) -> Option<Vec<u32>> {
        if deriv.len() != self.pattern.len() {
            return None;
        }
        deriv
            .iter()
            .zip(&self.pattern)
            .map(|(d, p)| d.checked_sub(*p))
            .collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs_expr(), self.rhs)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    rules: Vec<Rule>,
}

fn lex_less(a: &[u32], b: &[u32]) -> bool {
    a.cmp(b) == std::cmp::Ordering::Less
}

impl ConstraintSet {
    pub fn new() -> Self {
        ConstraintSet::default()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn merged(&self, other: &ConstraintSet) -> ConstraintSet {
        let mut out = self.clone();
        out.rules.extend(other.rules.iter().cloned());
        out
    }

    /// Adds the relation `lhs = rhs`.
    ///
    /// When `lhs` is a lone derivative of an undetermined function the rule
    /// is oriented towards it; otherwise the relation is solved for its
    /// lexicographically largest function derivative (name, then index).
    pub fn add_equation(&mut self, lhs: &Expr, rhs: &Expr) -> Result<()> {
        let l = RatFn::from_expr(lhs)?;
        let r = RatFn::from_expr(rhs)?;
        if let Some(Atom::UFn(u)) = l.as_atom() {
            let target = Atom::UFn(u.clone());
            if !r.any_atom(&mut |a| *a == target) {
                return self.push(u, r);
            }
        }
        let eq = l.sub(&r);
        let mut cands: Vec<Atom> = eq.atoms().into_iter().filter(|a| matches!(a, Atom::UFn(_))).collect();
        cands.sort_by(|a, b| match (a, b) {
            (Atom::UFn(x), Atom::UFn(y)) => (&x.name, &x.deriv).cmp(&(&y.name, &y.deriv)),
            _ => unreachable!(),
        });
        let Some(Atom::UFn(u)) = cands.pop() else {
            return Err(Error::InvalidConstraint(format!(
                "`{lhs} = {rhs}` involves no undetermined function"
            )));
        };
        let (coef, rest) = linear_split(&eq, &Atom::UFn(u.clone())).ok_or_else(|| {
            Error::InvalidConstraint(format!("`{lhs} = {rhs}` is not linear in its leading derivative"))
        })?;
        let solved = rest.neg().div(&coef)?;
        self.push(&u, solved)
    }

    fn push(&mut self, u: &super::UFnApp, rhs: RatFn) -> Result<()> {
        let mut formals = Vec::new();
        for a in &u.args {
            match a.as_symbol() {
                Some(s) if !formals.contains(s) => formals.push(s.clone()),
                _ => {
                    return Err(Error::InvalidConstraint(format!(
                        "arguments of `{}` must be distinct symbols",
                        u.name
                    )))
                }
            }
        }
        let mut bad = None;
        rhs.any_atom(&mut |a| {
            if let Atom::UFn(v) = a {
                if v.name == u.name && !lex_less(&v.deriv, &u.deriv) {
                    bad = Some(Expr::UFn(v.clone()).to_string());
                    return true;
                }
            }
            false
        });
        if let Some(b) = bad {
            return Err(Error::InvalidConstraint(format!(
                "rewrite of `{}` reintroduces `{b}`, which is not lexicographically smaller",
                Expr::UFn(std::sync::Arc::new(u.clone()))
            )));
        }
        self.rules.push(Rule {
            function: u.name.clone(),
            formals,
            pattern: u.deriv.clone(),
            rhs,
        });
        Ok(())
    }

    pub fn with_equation(mut self, lhs: &Expr, rhs: &Expr) -> Result<Self> {
        self.add_equation(lhs, rhs)?;
        Ok(self)
    }

    /// Rewrites to a fixed point, generating differential consequences of
    /// the rules on demand.
    pub fn apply(&self, r: &RatFn) -> Result<RatFn> {
        if self.rules.is_empty() {
            return Ok(r.clone());
        }
        let bound = 4 * (max_ufn_order(r) as usize + 1);
        let mut consequences: HashMap<(usize, Vec<u32>), RatFn> = HashMap::new();
        let mut cur = r.clone();
        for _ in 0..bound {
            let mut err = None;
            let next = map_atoms(&cur, &mut |a| {
                let Atom::UFn(u) = a else { return None };
                let (idx, rule, excess) = self.rules.iter().enumerate().find_map(|(i, rule)| {
                    (rule.function == u.name)
                        .then(|| rule.excess(&u.deriv))
                        .flatten()
                        .map(|ex| (i, rule, ex))
                })?;
                let body = consequences
                    .entry((idx, excess.clone()))
                    .or_insert_with(|| {
                        let mut v = rule.rhs.clone();
                        for (k, n) in excess.iter().enumerate() {
                            for _ in 0..*n {
                                v = derive(&v, &Partial(rule.formals[k].clone()));
                            }
                        }
                        v
                    })
                    .clone();
                let mut map = BTreeMap::new();
                for (s, arg) in rule.formals.iter().zip(&u.args) {
                    match RatFn::from_expr(arg) {
                        Ok(v) => {
                            map.insert(s.clone(), v);
                        }
                        Err(e) => err = Some(e),
                    }
                }
                match substitute_symbols(&body, &map) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        err = Some(e);
                        None
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            if next == cur {
                return Ok(cur);
            }
            cur = next;
        }
        Err(Error::DepthExceeded(bound))
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

fn max_ufn_order(r: &RatFn) -> u32 {
    let mut best = 0;
    r.any_atom(&mut |a| {
        if let Atom::UFn(u) = a {
            best = best.max(u.order());
        }
        false
    });
    best
}

/// Writes `e = coef·X + rest` for the atom `X`; `None` when `e` is not
/// linear in `X`.
pub fn linear_split(e: &RatFn, x: &Atom) -> Option<(RatFn, RatFn)> {
    let probe = Symbol::Param(super::name("__solve"));
    let replaced = map_atoms(e, &mut |a| (a == x).then(|| RatFn::symbol(probe.clone()))).ok()?;
    let coef = derive(&replaced, &Partial(probe.clone()));
    if coef.is_zero() || coef.contains_symbol(&probe) {
        return None;
    }
    let mut zero = BTreeMap::new();
    zero.insert(probe, RatFn::zero());
    let rest = substitute_symbols(&replaced, &zero).ok()?;
    Some((coef, rest))
}
