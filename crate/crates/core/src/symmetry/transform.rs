use std::collections::BTreeMap;
use std::sync::Arc;

use super::{equivalent_families, OperatorFamily, VectorField};
use crate::error::{Error, Result};
use crate::expr::{derive, substitute_symbols, ConstraintSet, Name, Partial, RatFn, Symbol};

/// Closed-form flow of a generator: `ε ↦` images of the moved coordinates.
pub type FlowFn = Arc<dyn Fn(&RatFn) -> Result<BTreeMap<Symbol, RatFn>> + Send + Sync>;

/// A point transformation given by the images of the coordinates that it
/// moves; unlisted coordinates are fixed. The inverse is written in the
/// same coordinate names.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTransformation {
    pub name: String,
    pub forward: BTreeMap<Symbol, RatFn>,
    pub inverse: Option<BTreeMap<Symbol, RatFn>>,
    pub parameter: Option<RatFn>,
}

impl PointTransformation {
    pub fn identity() -> Self {
        PointTransformation {
            name: "id".into(),
            forward: BTreeMap::new(),
            inverse: Some(BTreeMap::new()),
            parameter: None,
        }
    }

    pub fn new(name: &str, forward: BTreeMap<Symbol, RatFn>, inverse: Option<BTreeMap<Symbol, RatFn>>) -> Self {
        PointTransformation {
            name: name.to_string(),
            forward,
            inverse,
            parameter: None,
        }
    }

    pub fn image(&self, s: &Symbol) -> RatFn {
        self.forward.get(s).cloned().unwrap_or_else(|| RatFn::symbol(s.clone()))
    }

    /// `forward ∘ inverse` and `inverse ∘ forward` reduce to the identity.
    pub fn check_inverse(&self) -> Result<bool> {
        let inv = self.inverse.as_ref().ok_or(Error::MissingInverse)?;
        let keys: Vec<&Symbol> = self.forward.keys().chain(inv.keys()).collect();
        for k in keys {
            let there = substitute_symbols(&self.image(k), inv)?;
            let back = inv.get(k).cloned().unwrap_or_else(|| RatFn::symbol(k.clone()));
            let here = substitute_symbols(&back, &self.forward)?;
            let id = RatFn::symbol(k.clone());
            if !there.sub(&id).is_zero() || !here.sub(&id).is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `Ad(g)Q`: `ξ̃^k = Q(z̃^k) ∘ g⁻¹` for every coordinate `z^k`.
pub fn pushforward(g: &PointTransformation, q: &VectorField) -> Result<VectorField> {
    let inv = g.inverse.as_ref().ok_or(Error::MissingInverse)?;
    let mut keys: Vec<Symbol> = g.forward.keys().cloned().collect();
    keys.extend(q.coeffs().map(|(s, _)| s.clone()));
    keys.sort();
    keys.dedup();
    let mut parts = Vec::new();
    for k in keys {
        let c = q.apply(&g.image(&k));
        parts.push((k, substitute_symbols(&c, inv)?));
    }
    VectorField::new(&format!("Ad({}){}", g.name, q.name), parts)
}

pub fn pushforward_family(g: &PointTransformation, f: &OperatorFamily) -> Result<OperatorFamily> {
    Ok(OperatorFamily::new(
        &format!("Ad({}){}", g.name, f.name),
        f.members.iter().map(|q| pushforward(g, q)).collect::<Result<_>>()?,
    ))
}

/// `Q ∼ Ad(g)Q̃`.
pub fn equivalent_mod_group(
    q: &OperatorFamily,
    qt: &OperatorFamily,
    g: &PointTransformation,
    indeps: &[Name],
    c: &ConstraintSet,
) -> Result<bool> {
    equivalent_families(q, &pushforward_family(g, qt)?, indeps, c)
}

fn flow_parameter() -> Symbol {
    Symbol::param("eps")
}

/// The stored one-parameter group `e^{εV}`. The closed form is checked
/// against `d/dε z̃ = V(z̃)` at a symbolic parameter before `eps` is
/// substituted; the inverse is the flow at `−ε`.
pub fn flow(v: &VectorField, eps: &RatFn) -> Result<PointTransformation> {
    let f = v.flow.as_ref().ok_or_else(|| Error::NoFlow(v.name.clone()))?;
    let e = flow_parameter();
    let er = RatFn::symbol(e.clone());
    let fwd = f(&er)?;
    let mut keys: Vec<Symbol> = fwd.keys().cloned().collect();
    keys.extend(v.coeffs().map(|(s, _)| s.clone()));
    keys.sort();
    keys.dedup();
    for k in &keys {
        let img = fwd.get(k).cloned().unwrap_or_else(|| RatFn::symbol(k.clone()));
        let lhs = derive(&img, &Partial(e.clone()));
        let rhs = substitute_symbols(&v.coeff(k), &fwd)?;
        if !lhs.sub(&rhs).is_zero() {
            return Err(Error::Certification(format!(
                "flow of `{}` fails d/deps = V on `{k}`: {}",
                v.name,
                lhs.sub(&rhs)
            )));
        }
    }
    let inv = f(&er.neg())?;
    let at = |m: BTreeMap<Symbol, RatFn>| -> Result<BTreeMap<Symbol, RatFn>> {
        if *eps == er {
            return Ok(m);
        }
        let mut sub = BTreeMap::new();
        sub.insert(e.clone(), eps.clone());
        m.into_iter()
            .map(|(k, r)| Ok((k, substitute_symbols(&r, &sub)?)))
            .collect()
    };
    Ok(PointTransformation {
        name: format!("exp({eps}*{})", v.name),
        forward: at(fwd)?,
        inverse: Some(at(inv)?),
        parameter: Some(eps.clone()),
    })
}
