//! Bias of subcubes and the full-cube mass bound.

use num_traits::{Signed, Zero};

use crate::dist::Dist;
use crate::error::{QcError, Result};
use crate::rational::{one, ratio, Rational};
use crate::subcube::Subcube;
use crate::truth_table::TruthTable;

/// `|Pr_μ[g=0 | C] − Pr_μ[g=1 | C]|`.
pub fn bias(g: &TruthTable, mu: &Dist, c: &Subcube) -> Result<Rational> {
    mu.check_arity(g.arity())?;
    mu.check_arity(c.arity())?;
    let (mut m0, mut m1) = (Rational::zero(), Rational::zero());
    for x in c.points() {
        if g.get(x) {
            m1 += mu.prob(x);
        } else {
            m0 += mu.prob(x);
        }
    }
    let total = &m0 + &m1;
    if total.is_zero() {
        return Err(QcError::ZeroConditioningMass(format!("Pr[{c}] = 0")));
    }
    Ok(((m0 - m1) / total).abs())
}

/// The two quantities bounded by the full-cube proposition.
#[derive(Debug, Clone, PartialEq)]
pub struct FullbiasCheck {
    pub epsilon: Rational,
    /// `min_b Pr_μ[g = b]`.
    pub min_mass: Rational,
    /// `bias^μ({0,1}^m)`.
    pub full_bias: Rational,
    /// `min_mass > ε`.
    pub min_mass_exceeds_eps: bool,
    /// `full_bias < 1 − 2ε`.
    pub bias_below_bound: bool,
}

impl FullbiasCheck {
    /// The conclusion must hold whenever `D^μ_ε(g) > 0`; with complexity 0 there is
    /// nothing to check.
    pub fn consistent_with(&self, dist_complexity: usize) -> bool {
        dist_complexity == 0 || (self.min_mass_exceeds_eps && self.bias_below_bound)
    }
}

pub fn check_fullbias(g: &TruthTable, mu: &Dist, epsilon: &Rational) -> Result<FullbiasCheck> {
    mu.check_arity(g.arity())?;
    if epsilon.is_negative() || *epsilon >= ratio(1, 2) {
        return Err(QcError::InvalidParameter("ε must lie in [0, 1/2)".into()));
    }
    let m1 = mu.mass_where(|x| g.get(x));
    let m0 = one() - &m1;
    let full_bias = (&m0 - &m1).abs();
    let min_mass = m0.min(m1);
    let bound = one() - epsilon * ratio(2, 1);
    Ok(FullbiasCheck {
        epsilon: epsilon.clone(),
        min_mass_exceeds_eps: min_mass > *epsilon,
        bias_below_bound: full_bias < bound,
        min_mass,
        full_bias,
    })
}
