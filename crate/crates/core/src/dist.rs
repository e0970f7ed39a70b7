//! Exact probability distributions over `{0,1}^k`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::caps::Caps;
use crate::error::{parse_err, QcError, Result};
use crate::rational::{fmt_rational, parse_rational, Rational};
use crate::subcube::Subcube;
use crate::truth_table::TruthTable;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dist {
    arity: usize,
    probs: Vec<Rational>,
}

impl Dist {
    /// Validates length, nonnegativity and exact normalization.
    pub fn new(arity: usize, probs: Vec<Rational>) -> Result<Self> {
        Caps::check("distribution arity", arity, Caps::current().table.max(Caps::current().flat))?;
        if probs.len() != 1 << arity {
            return Err(QcError::InvalidDist(format!(
                "expected {} probabilities for arity {arity}, got {}",
                1usize << arity,
                probs.len()
            )));
        }
        if let Some(x) = probs.iter().position(|p| p.is_negative()) {
            return Err(QcError::InvalidDist(format!("negative probability at index {x}")));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(QcError::InvalidDist(format!(
                "probabilities sum to {}, not 1",
                fmt_rational(&total)
            )));
        }
        Ok(Dist { arity, probs })
    }

    /// Normalizes nonnegative integer weights.
    pub fn from_weights(arity: usize, weights: &[u64]) -> Result<Self> {
        let total: u128 = weights.iter().map(|&w| w as u128).sum();
        if total == 0 {
            return Err(QcError::InvalidDist("all weights are zero".into()));
        }
        let total = BigInt::from(total);
        let probs = weights
            .iter()
            .map(|&w| Rational::new(BigInt::from(w), total.clone()))
            .collect();
        Dist::new(arity, probs)
    }

    pub fn uniform(arity: usize) -> Result<Self> {
        Caps::check("distribution arity", arity, Caps::current().table)?;
        let p = Rational::new(BigInt::one(), BigInt::from(1u64) << arity);
        Dist::new(arity, vec![p; 1 << arity])
    }

    pub fn point_mass(arity: usize, x: u64) -> Result<Self> {
        Caps::check("distribution arity", arity, Caps::current().table)?;
        if x >= 1u64 << arity {
            return Err(QcError::PointOutOfRange { point: x, arity });
        }
        let mut probs = vec![Rational::zero(); 1 << arity];
        probs[x as usize] = Rational::one();
        Dist::new(arity, probs)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, x: u64) -> &Rational {
        &self.probs[x as usize]
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(x, _)| x as u64)
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|p| !p.is_zero())
    }

    /// `Pr_{x~μ}[pred(x)]`.
    pub fn mass_where(&self, pred: impl Fn(u64) -> bool) -> Rational {
        self.probs
            .iter()
            .enumerate()
            .filter(|&(x, _)| pred(x as u64))
            .map(|(_, p)| p)
            .sum()
    }

    /// `Pr_μ[C]`.
    pub fn subcube_prob(&self, c: &Subcube) -> Result<Rational> {
        self.check_arity(c.arity())?;
        Ok(c.points().map(|x| &self.probs[x as usize]).sum())
    }

    /// `Pr_μ[C2 | C1]`, where `C2` must refine `C1`.
    pub fn cond_prob(&self, c2: &Subcube, c1: &Subcube) -> Result<Rational> {
        self.check_arity(c1.arity())?;
        self.check_arity(c2.arity())?;
        if !c2.refines(c1) {
            return Err(QcError::NotARefinement);
        }
        let denom = self.subcube_prob(c1)?;
        if denom.is_zero() {
            return Err(QcError::ZeroConditioningMass(format!("Pr[{c1}] = 0")));
        }
        Ok(self.subcube_prob(c2)? / denom)
    }

    /// `μ_b`: μ conditioned on `g(x) = b`.
    pub fn restrict(&self, g: &TruthTable, b: bool) -> Result<Dist> {
        self.check_arity(g.arity())?;
        let mass = self.mass_where(|x| g.get(x) == b);
        if mass.is_zero() {
            return Err(QcError::ZeroConditioningMass(format!(
                "Pr[g = {}] = 0",
                b as u8
            )));
        }
        let probs = self
            .probs
            .iter()
            .enumerate()
            .map(|(x, p)| {
                if g.get(x as u64) == b {
                    p / &mass
                } else {
                    Rational::zero()
                }
            })
            .collect();
        Ok(Dist {
            arity: self.arity,
            probs,
        })
    }

    pub(crate) fn check_arity(&self, arity: usize) -> Result<()> {
        if arity != self.arity {
            Err(QcError::ArityMismatch {
                expected: self.arity,
                found: arity,
            })
        } else {
            Ok(())
        }
    }
}

/// `μ_b` as a free function, mirroring the operation name used in reports.
pub fn restrict_dist(mu: &Dist, g: &TruthTable, b: bool) -> Result<Dist> {
    mu.restrict(g, b)
}

/// File format: `arity=<k>` then `2^k` lines of `<numerator>/<denominator>` in index order.
impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "arity={}", self.arity)?;
        for p in &self.probs {
            writeln!(f, "{}", fmt_rational(p))?;
        }
        Ok(())
    }
}

impl FromStr for Dist {
    type Err = QcError;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty distribution file"))?;
        let arity: usize = header
            .strip_prefix("arity=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| parse_err(ln, "expected `arity=<k>`"))?;
        if arity > Caps::current().table {
            return Err(parse_err(ln, format!("arity {arity} exceeds the table cap")));
        }
        let mut probs = Vec::with_capacity(1 << arity);
        let mut last = ln;
        for (ln, line) in lines {
            last = ln;
            let p = parse_rational(line).map_err(|m| parse_err(ln, m))?;
            if p.is_negative() {
                return Err(parse_err(ln, "negative probability"));
            }
            probs.push(p);
        }
        if probs.len() != 1 << arity {
            return Err(parse_err(
                last,
                format!("expected {} probabilities, found {}", 1usize << arity, probs.len()),
            ));
        }
        Dist::new(arity, probs).map_err(|e| parse_err(last, e.to_string()))
    }
}
