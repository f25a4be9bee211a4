//! Symbolic expression kernel.
//!
//! [`Expr`] is the immutable tree that users build, parse and print. All
//! arithmetic that has to be exact (normalization, differentiation, zero
//! testing) goes through the rational-function normal form [`RatFn`] in
//! [`canon`], whose conversion back to a tree is the canonical form returned
//! by [`normalize`].

pub mod canon;
pub mod constraint;
mod diff;
pub mod parse;
mod print;
mod subst;
mod zero;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};

pub use canon::{Atom, Monomial, Poly, RatFn};
pub use constraint::{ConstraintSet, Rule};
pub use diff::{derive, Derivation, Partial};
pub use subst::{map_atoms, substitute, substitute_function, substitute_symbols};
pub use zero::{is_zero, is_zero_seeded, nonvanishing_core, ZeroTest, DEFAULT_SEED};

use crate::error::Result;

pub type Name = Arc<str>;
pub type Coeff = BigRational;
pub type Exponent = Rational64;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

pub fn coeff(n: i64) -> Coeff {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Coeff {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A jet coordinate `u^a_α`: a dependent variable together with the
/// multiset of independent variables it is differentiated by.
///
/// `derivs` is kept sorted by variable name with positive counts, so two
/// coordinates are equal iff they denote the same partial derivative.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetCoord {
    pub dep: Name,
    pub derivs: Vec<(Name, u32)>,
}

impl JetCoord {
    pub fn new(dep: &str) -> Self {
        JetCoord {
            dep: name(dep),
            derivs: Vec::new(),
        }
    }

    pub fn with_derivs<'a>(dep: &str, vars: impl IntoIterator<Item = &'a str>) -> Self {
        let mut c = JetCoord::new(dep);
        for v in vars {
            c = c.differentiated(&name(v));
        }
        c
    }

    pub fn order(&self) -> u32 {
        self.derivs.iter().map(|(_, k)| *k).sum()
    }

    pub fn count(&self, var: &str) -> u32 {
        self.derivs.iter().find(|(n, _)| &**n == var).map_or(0, |(_, k)| *k)
    }

    pub fn differentiated(&self, var: &Name) -> Self {
        let mut derivs = self.derivs.clone();
        match derivs.binary_search_by(|(n, _)| n.cmp(var)) {
            Ok(i) => derivs[i].1 += 1,
            Err(i) => derivs.insert(i, (var.clone(), 1)),
        }
        JetCoord {
            dep: self.dep.clone(),
            derivs,
        }
    }

    /// Removes one differentiation by `var`; `None` if there is none.
    pub fn integrated(&self, var: &str) -> Option<Self> {
        let i = self.derivs.iter().position(|(n, _)| &**n == var)?;
        let mut derivs = self.derivs.clone();
        if derivs[i].1 == 1 {
            derivs.remove(i);
        } else {
            derivs[i].1 -= 1;
        }
        Some(JetCoord {
            dep: self.dep.clone(),
            derivs,
        })
    }

    /// Whether `self` is a (non-strict) derivative of `base`; returns the
    /// remaining differentiations if so.
    pub fn excess_over(&self, base: &JetCoord) -> Option<Vec<(Name, u32)>> {
        if self.dep != base.dep {
            return None;
        }
        let mut rest = Vec::new();
        for (n, k) in &self.derivs {
            let b = base.count(n);
            if b > *k {
                return None;
            }
            if *k > b {
                rest.push((n.clone(), k - b));
            }
        }
        for (n, _) in &base.derivs {
            if self.count(n) == 0 {
                return None;
            }
        }
        Some(rest)
    }
}

/// A scalar symbol. Independent variables and parameters are plain names;
/// dependent variables and their derivatives are jet coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Indep(Name),
    Param(Name),
    Jet(JetCoord),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Independent,
    Parameter,
    JetCoordinate,
}

impl Symbol {
    pub fn indep(n: &str) -> Self {
        Symbol::Indep(name(n))
    }

    pub fn param(n: &str) -> Self {
        Symbol::Param(name(n))
    }

    pub fn dep(n: &str) -> Self {
        Symbol::Jet(JetCoord::new(n))
    }

    pub fn kind(&self) -> SymbolKind {
        match self {
            Symbol::Indep(_) => SymbolKind::Independent,
            Symbol::Param(_) => SymbolKind::Parameter,
            Symbol::Jet(_) => SymbolKind::JetCoordinate,
        }
    }

    pub fn name(&self) -> &Name {
        match self {
            Symbol::Indep(n) | Symbol::Param(n) => n,
            Symbol::Jet(c) => &c.dep,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElemFn {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Coth,
}

impl ElemFn {
    pub const ALL: [ElemFn; 9] = [
        ElemFn::Exp,
        ElemFn::Log,
        ElemFn::Sin,
        ElemFn::Cos,
        ElemFn::Tan,
        ElemFn::Sinh,
        ElemFn::Cosh,
        ElemFn::Tanh,
        ElemFn::Coth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElemFn::Exp => "exp",
            ElemFn::Log => "log",
            ElemFn::Sin => "sin",
            ElemFn::Cos => "cos",
            ElemFn::Tan => "tan",
            ElemFn::Sinh => "sinh",
            ElemFn::Cosh => "cosh",
            ElemFn::Tanh => "tanh",
            ElemFn::Coth => "coth",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ElemFn::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Application of an undetermined function, possibly differentiated:
/// `deriv[k]` counts differentiations with respect to argument slot `k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UFnApp {
    pub name: Name,
    pub deriv: Vec<u32>,
    pub args: Vec<Expr>,
}

impl UFnApp {
    pub fn order(&self) -> u32 {
        self.deriv.iter().sum()
    }
}

/// Immutable expression tree. The derived ordering is the total structural
/// order used to sort operands of sums and products.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Coeff),
    Sym(Symbol),
    Sum(Arc<Vec<Expr>>),
    Product(Arc<Vec<Expr>>),
    Pow(Arc<Expr>, Exponent),
    Fn(ElemFn, Arc<Expr>),
    UFn(Arc<UFnApp>),
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Const(Coeff::zero())
    }

    pub fn one() -> Self {
        Expr::Const(Coeff::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::Const(coeff(n))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Expr::Const(ratio(n, d))
    }

    pub fn indep(n: &str) -> Self {
        Expr::Sym(Symbol::indep(n))
    }

    pub fn param(n: &str) -> Self {
        Expr::Sym(Symbol::param(n))
    }

    pub fn dep(n: &str) -> Self {
        Expr::Sym(Symbol::dep(n))
    }

    /// Jet coordinate of `dep` differentiated once by each listed variable.
    pub fn jet(dep: &str, vars: &[&str]) -> Self {
        Expr::Sym(Symbol::Jet(JetCoord::with_derivs(dep, vars.iter().copied())))
    }

    pub fn ufn(n: &str, args: Vec<Expr>) -> Self {
        let deriv = vec![0; args.len()];
        Expr::UFn(Arc::new(UFnApp {
            name: name(n),
            deriv,
            args,
        }))
    }

    pub fn ufn_deriv(n: &str, deriv: Vec<u32>, args: Vec<Expr>) -> Self {
        assert_eq!(deriv.len(), args.len(), "derivative index length must match arity");
        Expr::UFn(Arc::new(UFnApp {
            name: name(n),
            deriv,
            args,
        }))
    }

    pub fn func(f: ElemFn, arg: Expr) -> Self {
        Expr::Fn(f, Arc::new(arg))
    }

    pub fn pow(self, e: Exponent) -> Self {
        Expr::Pow(Arc::new(self), e)
    }

    pub fn powi(self, e: i64) -> Self {
        self.pow(Exponent::from_integer(e))
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        let mut out = Vec::new();
        for t in terms {
            match t {
                Expr::Sum(inner) => out.extend(inner.iter().cloned()),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(Arc::new(out)),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        let mut out = Vec::new();
        for f in factors {
            match f {
                Expr::Product(inner) => out.extend(inner.iter().cloned()),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::Product(Arc::new(out)),
        }
    }

    pub fn recip(self) -> Self {
        self.powi(-1)
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Expr::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn to_ratfn(&self) -> Result<RatFn> {
        RatFn::from_expr(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::Sym(s)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum([self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum([self, -rhs])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product([self, rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            other => Expr::product([Expr::int(-1), other]),
        }
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::product([self, rhs.recip()])
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_symbol(f, self)
    }
}

/// Canonical form: expanded, like terms collected, rational powers combined,
/// `sin² → 1 − cos²` and `sinh² → cosh² − 1`, operands sorted.
///
/// Numerators are unique. Denominators are products of factors that are
/// not multiples of one another, but a factor is not split further, so two
/// equal quotients can print differently; their difference still
/// normalizes to `0`.
pub fn normalize(e: &Expr) -> Result<Expr> {
    Ok(RatFn::from_expr(e)?.to_expr())
}

/// Partial derivative treating every other symbol as constant.
pub fn differentiate(e: &Expr, s: &Symbol) -> Result<Expr> {
    let r = RatFn::from_expr(e)?;
    Ok(derive(&r, &Partial(s.clone())).to_expr())
}
