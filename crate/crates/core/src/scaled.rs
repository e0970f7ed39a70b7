//! Integer-scaled view of a distribution: every probability written over one
//! common denominator. All sums stay exact, and the hot loops (subcube masses,
//! the dynamic program, claim sweeps) avoid rational normalization.

use std::cmp::Ordering;
use std::ops::Add;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::dist::Dist;
use crate::rational::Rational;

/// Exact nonnegative integer weight.
pub trait Weight:
    Clone + Ord + Zero + for<'a> Add<&'a Self, Output = Self> + Send + Sync + std::fmt::Debug
{
    fn from_biguint(v: &BigUint) -> Option<Self>;
    fn to_biguint(&self) -> BigUint;
    fn as_u128(&self) -> Option<u128>;
}

impl Weight for u128 {
    fn from_biguint(v: &BigUint) -> Option<Self> {
        ToPrimitive::to_u128(v)
    }
    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }
    fn as_u128(&self) -> Option<u128> {
        Some(*self)
    }
}

impl Weight for BigUint {
    fn from_biguint(v: &BigUint) -> Option<Self> {
        Some(v.clone())
    }
    fn to_biguint(&self) -> BigUint {
        self.clone()
    }
    fn as_u128(&self) -> Option<u128> {
        ToPrimitive::to_u128(self)
    }
}

/// Probabilities `weights[x] / denom`.
#[derive(Debug, Clone)]
pub struct Scaled<W> {
    pub denom: W,
    pub weights: Vec<W>,
}

impl<W: Weight> Scaled<W> {
    pub fn to_rational(&self, w: &W) -> Rational {
        Rational::new(BigInt::from(w.to_biguint()), BigInt::from(self.denom.to_biguint()))
    }
}

/// A scaled distribution in whichever integer width fits.
pub enum AnyScaled {
    /// Denominator at most 2^64, so any sum fits and any pairwise product fits in u128.
    Small(Scaled<u128>),
    Big(Scaled<BigUint>),
}

impl Dist {
    pub fn scaled(&self) -> AnyScaled {
        let denom = self
            .probs()
            .iter()
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let weights: Vec<BigUint> = self
            .probs()
            .iter()
            .map(|p| {
                (p.numer() * (&denom / p.denom()))
                    .to_biguint()
                    .expect("probabilities are nonnegative")
            })
            .collect();
        let denom = denom.to_biguint().expect("denominators are positive");
        if denom.bits() <= 64 {
            AnyScaled::Small(Scaled {
                denom: denom.to_u128().unwrap(),
                weights: weights.iter().map(|w| w.to_u128().unwrap()).collect(),
            })
        } else {
            AnyScaled::Big(Scaled { denom, weights })
        }
    }
}

/// Runs a generic computation on whichever scaled representation `dist` has.
macro_rules! with_scaled {
    ($dist:expr, |$s:ident| $body:expr) => {
        match $dist.scaled() {
            $crate::scaled::AnyScaled::Small($s) => $body,
            $crate::scaled::AnyScaled::Big($s) => $body,
        }
    };
}
pub(crate) use with_scaled;

pub(crate) fn pow3(k: usize) -> usize {
    3usize.pow(k as u32)
}

/// Ternary index of the single-point subcube `{x}`.
#[cfg(test)]
pub(crate) fn point_ternary(x: u64, arity: usize) -> usize {
    let mut idx = 0usize;
    for j in (0..arity).rev() {
        idx = idx * 3 + ((x >> j) & 1) as usize;
    }
    idx
}

/// Mass of every subcube (indexed by ternary index) given per-point masses.
///
/// A subcube with lowest free variable `j` is the disjoint union of its two
/// children with digit `j` set to 0 and 1; both have smaller indices.
pub(crate) fn subcube_masses<W>(arity: usize, point_mass: impl Fn(u64) -> W) -> Vec<W>
where
    W: Clone + for<'a> Add<&'a W, Output = W>,
{
    let size = pow3(arity);
    let mut out: Vec<W> = Vec::with_capacity(size);
    let mut digits = vec![0u8; arity];
    for idx in 0..size {
        let value = match digits.iter().position(|&d| d == 2) {
            None => {
                let x = digits
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (j, &d)| acc | (d as u64) << j);
                point_mass(x)
            }
            Some(j) => {
                let step = pow3(j);
                out[idx - 2 * step].clone() + &out[idx - step]
            }
        };
        out.push(value);
        increment_ternary(&mut digits);
    }
    out
}

/// Codimension of every subcube, indexed by ternary index.
pub(crate) fn subcube_codims(arity: usize) -> Vec<u8> {
    let size = pow3(arity);
    let mut out = Vec::with_capacity(size);
    let mut digits = vec![0u8; arity];
    for _ in 0..size {
        out.push(digits.iter().filter(|&&d| d != 2).count() as u8);
        increment_ternary(&mut digits);
    }
    out
}

pub(crate) fn increment_ternary(digits: &mut [u8]) {
    for d in digits.iter_mut() {
        if *d == 2 {
            *d = 0;
        } else {
            *d += 1;
            return;
        }
    }
}

/// Compares `a1*a2*... ` with `b1*b2*...` exactly.
pub(crate) fn cmp_products(lhs: &[&BigUint], rhs: &[&BigUint]) -> Ordering {
    let l: BigUint = lhs.iter().copied().product();
    let r: BigUint = rhs.iter().copied().product();
    l.cmp(&r)
}

/// u128 fast path for product comparisons; falls back to big integers on overflow.
pub(crate) fn cmp_products_w<W: Weight>(lhs: &[&W], rhs: &[&W]) -> Ordering {
    fn prod(xs: &[u128]) -> Option<u128> {
        xs.iter().try_fold(1u128, |acc, &x| acc.checked_mul(x))
    }
    let small_l: Option<Vec<u128>> = lhs.iter().map(|w| w.as_u128()).collect();
    let small_r: Option<Vec<u128>> = rhs.iter().map(|w| w.as_u128()).collect();
    if let (Some(l), Some(r)) = (small_l, small_r) {
        if let (Some(pl), Some(pr)) = (prod(&l), prod(&r)) {
            return pl.cmp(&pr);
        }
    }
    let l: Vec<BigUint> = lhs.iter().map(|w| w.to_biguint()).collect();
    let r: Vec<BigUint> = rhs.iter().map(|w| w.to_biguint()).collect();
    cmp_products(&l.iter().collect::<Vec<_>>(), &r.iter().collect::<Vec<_>>())
}

/// Splits a nonnegative rational into numerator and denominator as weights.
pub(crate) fn rational_parts<W: Weight>(r: &Rational) -> Option<(W, W)> {
    let num = r.numer().to_biguint()?;
    let den = r.denom().to_biguint()?;
    Some((W::from_biguint(&num)?, W::from_biguint(&den)?))
}
