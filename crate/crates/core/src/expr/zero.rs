//! Decision procedure for "this expression vanishes identically".

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::canon::{Atom, Monomial, Poly, RatFn};
use super::constraint::ConstraintSet;
use super::{Coeff, Expr};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x5EED_1DE4;

const SAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZeroTest {
    Zero,
    /// The reduced numerator together with atom values at which it is
    /// nonzero.
    NonZero {
        residual: RatFn,
        witness: Vec<(String, String)>,
    },
}

impl ZeroTest {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroTest::Zero)
    }
}

/// `true` iff `e` vanishes modulo the constraints. A nonzero normal form
/// that also vanishes at every sample point is reported as
/// [`Error::Inconclusive`].
pub fn is_zero(e: &Expr, constraints: &ConstraintSet) -> Result<bool> {
    let r = RatFn::from_expr(e)?;
    Ok(is_zero_seeded(&r, constraints, DEFAULT_SEED)?.is_zero())
}

pub fn is_zero_seeded(r: &RatFn, constraints: &ConstraintSet, seed: u64) -> Result<ZeroTest> {
    let reduced = constraints.apply(r)?;
    let core = nonvanishing_core(&reduced);
    if core.is_zero() {
        return Ok(ZeroTest::Zero);
    }
    match witness(&core, seed) {
        Some(witness) => Ok(ZeroTest::NonZero {
            residual: RatFn::from_poly(core),
            witness,
        }),
        None => Err(Error::Inconclusive(format!(
            "`{}` vanishes at all {SAMPLES} sample points",
            core.to_expr()
        ))),
    }
}

/// Numerator of `r` multiplied by the monomial that clears its negative
/// exponents, then re-canonicalized. Zero iff `r` is zero; nonvanishing
/// whenever `r` is.
pub fn nonvanishing_core(r: &RatFn) -> Poly {
    let num = r.num();
    let mut clear = Monomial::one();
    for a in num.atoms() {
        let low = num.terms().map(|(m, _)| m.exponent(&a)).min().unwrap_or_default();
        if low < super::Exponent::zero() {
            clear = clear.mul(&Monomial::atom_pow(a, -low));
        }
    }
    if clear.is_one() {
        num.mul(&Poly::one())
    } else {
        num.mul_term(&clear, &Coeff::one())
    }
}

fn sample(rng: &mut ChaCha8Rng) -> Coeff {
    let n: i64 = rng.gen_range(1..=29);
    let d: i64 = rng.gen_range(1..=13);
    let s = if rng.gen_bool(0.5) { -1 } else { 1 };
    Coeff::new(BigInt::from(s * n), BigInt::from(d))
}

fn power(base: &Coeff, k: i64) -> Coeff {
    let mut out = Coeff::one();
    let b = if k < 0 { base.recip() } else { base.clone() };
    for _ in 0..k.unsigned_abs() {
        out *= &b;
    }
    out
}

/// Evaluates `p` treating each atom as an independent variable, at seeded
/// random points. Fractional exponents are handled by sampling `w` and
/// setting the atom to `w^Q`, `Q` the common denominator of its exponents.
fn witness(p: &Poly, seed: u64) -> Option<Vec<(String, String)>> {
    let atoms = p.atoms();
    let denoms: BTreeMap<&Atom, i64> = atoms
        .iter()
        .map(|a| {
            let q = p
                .terms()
                .map(|(m, _)| *m.exponent(a).denom())
                .fold(1i64, |acc, d| acc.lcm(&d));
            (a, q)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SAMPLES {
        let w: BTreeMap<&Atom, Coeff> = atoms.iter().map(|a| (a, sample(&mut rng))).collect();
        let mut total = Coeff::zero();
        for (m, c) in p.terms() {
            let mut t = c.clone();
            for (a, e) in m.factors() {
                let q = denoms[a];
                let k = e.numer() * (q / e.denom());
                t *= power(&w[a], k);
            }
            total += t;
        }
        if !total.is_zero() {
            return Some(
                atoms
                    .iter()
                    .map(|a| (a.to_string(), power(&w[a], denoms[a]).to_string()))
                    .collect(),
            );
        }
    }
    None
}
