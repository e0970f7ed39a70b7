//! Per-subcube masses of `μ` split by the value of `g`, in exact integers over a
//! common denominator. Bias, `Pr_μ[C]` and `Pr_{μ_b}[C]` all derive from it.

use std::fmt::Debug;
use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::dist::Dist;
use crate::error::{QcError, Result};
use crate::rational::Rational;
use crate::scaled::{subcube_codims, subcube_masses};
use crate::subcube::Subcube;
use crate::truth_table::TruthTable;

/// Exact signed integer used by the claim checks.
pub trait Int:
    Clone + Ord + Signed + Send + Sync + Debug + From<i64> + for<'a> Add<&'a Self, Output = Self>
{
    fn to_bigint(&self) -> BigInt;
}

impl Int for i128 {
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Int for BigInt {
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

/// Largest denominator, in bits, handled with `i128`; checks multiply at most
/// three such numbers with a small constant.
pub const SMALL_BITS: u64 = 40;

#[derive(Debug, Clone)]
pub struct SplitTable<I> {
    arity: usize,
    denom: I,
    /// `μ(C ∩ g⁻¹(0))·denom` by ternary index.
    zero: Vec<I>,
    one: Vec<I>,
    codim: Vec<u8>,
}

impl<I: Int> SplitTable<I> {
    /// `weights[x] / denom` must be a distribution.
    pub fn from_weights(g: &TruthTable, weights: &[I], denom: I) -> Self {
        let arity = g.arity();
        let zero = subcube_masses(arity, |x| {
            if g.get(x) {
                I::zero()
            } else {
                weights[x as usize].clone()
            }
        });
        let one = subcube_masses(arity, |x| {
            if g.get(x) {
                weights[x as usize].clone()
            } else {
                I::zero()
            }
        });
        SplitTable {
            arity,
            denom,
            zero,
            one,
            codim: subcube_codims(arity),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.zero.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zero.is_empty()
    }

    pub fn denom(&self) -> &I {
        &self.denom
    }

    pub fn full_index(&self) -> usize {
        self.zero.len() - 1
    }

    #[inline]
    pub fn codim(&self, idx: usize) -> usize {
        self.codim[idx] as usize
    }

    /// Scaled `Pr_μ[C ∩ g⁻¹(b)]`.
    #[inline]
    pub fn part(&self, idx: usize, b: bool) -> &I {
        if b {
            &self.one[idx]
        } else {
            &self.zero[idx]
        }
    }

    /// Scaled `Pr_μ[C]`.
    #[inline]
    pub fn mass(&self, idx: usize) -> I {
        self.zero[idx].clone() + &self.one[idx]
    }

    /// Scaled `Pr_μ[g = b]`.
    pub fn total(&self, b: bool) -> &I {
        self.part(self.full_index(), b)
    }

    /// Scaled `|Pr_μ[C ∩ g=1] − Pr_μ[C ∩ g=0]|`; bias is this over `mass`.
    #[inline]
    pub fn gap(&self, idx: usize) -> I {
        (self.one[idx].clone() - self.zero[idx].clone()).abs()
    }

    /// `bias(C) ≥ n/d`, exactly. False on zero-mass subcubes.
    #[inline]
    pub fn bias_at_least(&self, idx: usize, n: &I, d: &I) -> bool {
        let mass = self.mass(idx);
        !mass.is_zero() && self.gap(idx) * d.clone() >= n.clone() * mass
    }

    /// `bias(C)² ≥ n/d`, exactly. False on zero-mass subcubes.
    #[inline]
    pub fn bias_sq_at_least(&self, idx: usize, n: &I, d: &I) -> bool {
        let mass = self.mass(idx);
        if mass.is_zero() {
            return false;
        }
        let gap = self.gap(idx);
        gap.clone() * gap * d.clone() >= n.clone() * mass.clone() * mass
    }

    fn ratio(&self, num: &I, den: &I) -> Rational {
        Rational::new(num.to_bigint(), den.to_bigint())
    }

    pub fn mass_rational(&self, idx: usize) -> Rational {
        self.ratio(&self.mass(idx), &self.denom)
    }

    pub fn part_rational(&self, idx: usize, b: bool) -> Rational {
        self.ratio(self.part(idx, b), &self.denom)
    }

    /// `Pr_{μ_b}[C]`, `None` when `Pr_μ[g=b] = 0`.
    pub fn restricted_rational(&self, idx: usize, b: bool) -> Option<Rational> {
        let t = self.total(b);
        (!t.is_zero()).then(|| self.ratio(self.part(idx, b), t))
    }

    /// `bias^μ(C)`, `None` on zero mass.
    pub fn bias_rational(&self, idx: usize) -> Option<Rational> {
        let mass = self.mass(idx);
        (!mass.is_zero()).then(|| self.ratio(&self.gap(idx), &mass))
    }
}

/// Common-denominator integer weights of a distribution.
pub(crate) fn integer_weights(mu: &Dist) -> (Vec<BigInt>, BigInt) {
    let denom = mu
        .probs()
        .iter()
        .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let weights = mu
        .probs()
        .iter()
        .map(|p| p.numer() * (&denom / p.denom()))
        .collect();
    (weights, denom)
}

/// A split table in whichever integer width fits.
#[derive(Debug, Clone)]
pub enum AnySplit {
    Small(SplitTable<i128>),
    Big(SplitTable<BigInt>),
}

/// Runs a generic computation on whichever width `split` has.
macro_rules! with_split {
    ($split:expr, |$t:ident| $body:expr) => {
        match $split {
            $crate::split::AnySplit::Small($t) => $body,
            $crate::split::AnySplit::Big($t) => $body,
        }
    };
}

impl AnySplit {
    pub fn new(g: &TruthTable, mu: &Dist) -> Result<Self> {
        if g.arity() != mu.arity() {
            return Err(QcError::ArityMismatch {
                expected: g.arity(),
                found: mu.arity(),
            });
        }
        let (weights, denom) = integer_weights(mu);
        if denom.bits() <= SMALL_BITS {
            let w: Vec<i128> = weights.iter().map(|w| w.to_i128().unwrap()).collect();
            Ok(AnySplit::Small(SplitTable::from_weights(
                g,
                &w,
                denom.to_i128().unwrap(),
            )))
        } else {
            Ok(AnySplit::Big(SplitTable::from_weights(g, &weights, denom)))
        }
    }

    pub fn arity(&self) -> usize {
        with_split!(self, |t| t.arity())
    }

    pub fn mass(&self, c: &Subcube) -> Rational {
        let idx = c.ternary_index();
        with_split!(self, |t| t.mass_rational(idx))
    }

    pub fn part(&self, c: &Subcube, b: bool) -> Rational {
        let idx = c.ternary_index();
        with_split!(self, |t| t.part_rational(idx, b))
    }

    pub fn restricted(&self, c: &Subcube, b: bool) -> Option<Rational> {
        let idx = c.ternary_index();
        with_split!(self, |t| t.restricted_rational(idx, b))
    }

    pub fn bias(&self, c: &Subcube) -> Option<Rational> {
        let idx = c.ternary_index();
        with_split!(self, |t| t.bias_rational(idx))
    }

    /// `Pr_μ[g = b]`.
    pub fn total(&self, b: bool) -> Rational {
        with_split!(self, |t| t.part_rational(t.full_index(), b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::bias;
    use crate::rational::ratio;

    #[test]
    fn matches_direct_computation() {
        let g = TruthTable::majority(3).unwrap();
        let mu = Dist::from_weights(3, &[3, 1, 4, 1, 5, 9, 2, 6]).unwrap();
        let s = AnySplit::new(&g, &mu).unwrap();
        assert!(matches!(s, AnySplit::Small(_)));
        let mu1 = mu.restrict(&g, true).unwrap();
        for c in Subcube::all(3) {
            assert_eq!(s.mass(&c), mu.subcube_prob(&c).unwrap());
            assert_eq!(s.restricted(&c, true).unwrap(), mu1.subcube_prob(&c).unwrap());
            assert_eq!(s.bias(&c).unwrap(), bias(&g, &mu, &c).unwrap());
        }
    }

    #[test]
    fn wide_denominators_use_big_integers() {
        let big = BigInt::from(1u64 << 50);
        let p = Rational::new(BigInt::one(), big.clone());
        let q = Rational::one() - &p;
        let mu = Dist::new(1, vec![p.clone(), q]).unwrap();
        let s = AnySplit::new(&TruthTable::identity(), &mu).unwrap();
        assert!(matches!(s, AnySplit::Big(_)));
        assert_eq!(s.total(false), p);
    }

    #[test]
    fn bias_thresholds() {
        let g = TruthTable::and(2).unwrap();
        let t = SplitTable::<i128>::from_weights(&g, &[1, 1, 1, 1], 4);
        let full = t.full_index();
        assert!(t.bias_at_least(full, &1, &2));
        assert!(!t.bias_at_least(full, &2, &3));
        assert!(t.bias_sq_at_least(full, &1, &4));
        assert!(!t.bias_sq_at_least(full, &1, &3));
        assert_eq!(t.bias_rational(full), Some(ratio(1, 2)));
    }
}
