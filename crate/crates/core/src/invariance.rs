//! Lie and conditional invariance checks and determining systems.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::expr::{is_zero_seeded, Atom, ConstraintSet, Monomial, Poly, RatFn, Symbol, ZeroTest};
use crate::jet::{intersection_rules, PdeSystem, RuleSet};
use crate::symmetry::{
    canonicalize, characteristic_rules, indeps_of, is_involutive, Chart, OperatorFamily, Prolongation, VectorField,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Invariant,
    NotInvariant { witness: Vec<(String, String)> },
    Inconclusive(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Invariant => "pass",
            Verdict::NotInvariant { .. } => "fail",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Residual {
    /// `member: equation`.
    pub label: String,
    pub value: RatFn,
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub system: String,
    pub family: String,
    pub residuals: Vec<Residual>,
    pub verdict: Verdict,
    pub constraints: String,
    pub elapsed: Duration,
}

impl InvarianceReport {
    pub fn is_invariant(&self) -> bool {
        self.verdict == Verdict::Invariant
    }

    /// Residuals that did not reduce to zero.
    pub fn nonzero(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| !r.value.is_zero())
    }
}

impl fmt::Display for InvarianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}: {}", self.family, self.system, self.verdict.label())?;
        for r in self.nonzero() {
            write!(f, "\n  {}: {}", r.label, r.value)?;
        }
        if let Verdict::Inconclusive(msg) = &self.verdict {
            write!(f, "\n  {msg}")?;
        }
        Ok(())
    }
}

/// Applies the prolonged members to every equation, restricts with `rules`
/// and decides each residual.
fn run(
    sys: &PdeSystem,
    family: &str,
    members: &[VectorField],
    rules: &RuleSet,
    c: &ConstraintSet,
    seed: u64,
) -> Result<InvarianceReport> {
    let start = Instant::now();
    let mut residuals = Vec::new();
    let mut verdict = Verdict::Invariant;
    for q in members {
        let pr = Prolongation::new(q, &sys.space);
        for eq in &sys.equations {
            let raw = pr.apply(&eq.residual());
            let value = c.apply(&rules.reduce(&raw)?)?;
            let label = format!("{}: {}", q.name, eq);
            match is_zero_seeded(&value, c, seed) {
                Ok(ZeroTest::Zero) => residuals.push(Residual {
                    label,
                    value: RatFn::zero(),
                }),
                Ok(ZeroTest::NonZero { witness, .. }) => {
                    if verdict == Verdict::Invariant {
                        verdict = Verdict::NotInvariant { witness };
                    }
                    residuals.push(Residual { label, value });
                }
                Err(Error::Inconclusive(msg)) => {
                    if verdict == Verdict::Invariant {
                        verdict = Verdict::Inconclusive(msg);
                    }
                    residuals.push(Residual { label, value });
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(InvarianceReport {
        system: sys.id.clone(),
        family: family.to_string(),
        residuals,
        verdict,
        constraints: c.to_string(),
        elapsed: start.elapsed(),
    })
}

/// Classical invariance: `Q_(r) L = 0` on `L`.
pub fn lie_check(sys: &PdeSystem, q: &VectorField, c: &ConstraintSet, seed: u64) -> Result<InvarianceReport> {
    run(sys, &q.name, std::slice::from_ref(q), &sys.rules(), c, seed)
}

/// Rules for `M ∩ L` together with the canonical members they came from.
fn conditional_rules(
    sys: &PdeSystem,
    f: &OperatorFamily,
    c: &ConstraintSet,
    chart: &Chart,
) -> Result<(Vec<VectorField>, RuleSet)> {
    let indeps = indeps_of(&sys.space);
    if is_involutive(f, &indeps, c)?.is_none() {
        return Err(Error::NotInvolutive(f.name.clone()));
    }
    let canon = canonicalize(f, &indeps, chart)?;
    let m = characteristic_rules(&canon, &sys.space)?;
    let rules = intersection_rules(sys, &m)?;
    Ok((canon.family.members, rules))
}

/// Conditional invariance: `Q^s_(r) L = 0` on `M ∩ L` for every member.
pub fn qcond_check(
    sys: &PdeSystem,
    f: &OperatorFamily,
    c: &ConstraintSet,
    chart: &Chart,
    seed: u64,
) -> Result<InvarianceReport> {
    let (members, rules) = conditional_rules(sys, f, c, chart)?;
    run(sys, &f.name, &members, &rules, c, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Lie,
    QCond,
}

/// One determining equation: the coefficient of a monomial in the
/// parametric jet coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminingEquation {
    pub monomial: Monomial,
    pub coefficient: RatFn,
}

fn is_parametric(a: &Atom) -> bool {
    matches!(a, Atom::Sym(Symbol::Jet(c)) if c.order() > 0)
}

fn has_nested_jet(a: &Atom) -> bool {
    !is_parametric(a) && a.any_nested(&mut |b| is_parametric(b))
}

/// Coefficients of the restricted residual, viewed as a polynomial in the
/// parametric jet coordinates. The list is empty iff the residual vanishes.
pub fn determining_system(
    sys: &PdeSystem,
    template: &VectorField,
    mode: Mode,
    c: &ConstraintSet,
    chart: &Chart,
) -> Result<Vec<DeterminingEquation>> {
    let (members, rules) = match mode {
        Mode::Lie => (vec![template.clone()], sys.rules()),
        Mode::QCond => conditional_rules(sys, &OperatorFamily::single(template.clone()), c, chart)?,
    };
    let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
    for q in &members {
        let pr = Prolongation::new(q, &sys.space);
        for eq in &sys.equations {
            let value = c.apply(&rules.reduce(&pr.apply(&eq.residual()))?)?;
            if let Some(a) = value.num().atoms().into_iter().find(has_nested_jet) {
                return Err(Error::Invalid(format!(
                    "residual is not polynomial in the jet coordinates: `{}`",
                    a.to_expr()
                )));
            }
            for (m, k) in value.num().terms() {
                let (jets, rest) = m.split(is_parametric);
                let slot = groups.entry(jets).or_insert_with(Poly::zero);
                *slot = slot.add(&Poly::term(rest, k.clone()));
            }
        }
    }
    Ok(groups
        .into_iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(monomial, p)| DeterminingEquation {
            monomial,
            coefficient: RatFn::from_poly(p),
        })
        .collect())
}
