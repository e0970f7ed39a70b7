use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::complexity::dist_complexity;
use crate::dist::Dist;
use crate::dtree::DecisionTree;
use crate::error::{QcError, Result};
use crate::rational::{exact_sqrt, fmt_rational, ratio, Rational};
use crate::scaled::pow3;
use crate::split::{AnySplit, Int, SplitTable, SMALL_BITS};
use crate::subcube::Subcube;
use crate::truth_table::TruthTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ClaimPart {
    /// Upper inequality, `Pr_μ[C] ≤ (1+4δ)·Pr_{μ_b}[C]`.
    A,
    /// Lower inequality, `Pr_μ[C] ≥ (1−4δ)·Pr_{μ_b}[C]`.
    B,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnbiasViolation {
    pub subcube: Subcube,
    pub b: bool,
    pub part: ClaimPart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasReport {
    pub delta: Rational,
    /// Subcubes with positive mass and bias at most `δ`.
    pub subcubes_checked: usize,
    pub violations: Vec<UnbiasViolation>,
    /// Extremes of `Pr_μ[C] / Pr_{μ_b}[C]` over checked subcubes with `Pr_{μ_b}[C] > 0`.
    pub min_ratio: Option<Rational>,
    pub max_ratio: Option<Rational>,
}

impl UnbiasReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn small_enough(r: &Rational) -> bool {
    r.numer().bits() <= SMALL_BITS && r.denom().bits() <= SMALL_BITS
}

fn parts<I: Int>(r: &Rational) -> (I, I) {
    let conv = |v: &BigInt| -> I {
        match v.to_i64() {
            Some(s) => I::from(s),
            None => unreachable!("only used with parts below 2^40"),
        }
    };
    (conv(r.numer()), conv(r.denom()))
}

fn widen(g: &TruthTable, mu: &Dist) -> SplitTable<BigInt> {
    let (w, d) = crate::split::integer_weights(mu);
    SplitTable::from_weights(g, &w, d)
}

/// Subcube verdicts for the unbias claim at `δ = dn/dd`, or `None` when the
/// full-cube hypothesis `bias ≤ δ` fails. Calls `visit(idx, b, ok_a, ok_b)` per
/// checked pair.
fn unbias_scan<I: Int>(t: &SplitTable<I>, dn: &I, dd: &I, mut visit: impl FnMut(usize, bool, bool, bool)) -> Option<usize> {
    let full = t.full_index();
    if t.gap(full) * dd.clone() > dn.clone() * t.mass(full) {
        return None;
    }
    let four = I::from(4);
    let up = dd.clone() + &(four.clone() * dn.clone());
    let down = dd.clone() - four * dn.clone();
    let denom = t.denom();
    let mut checked = 0;
    for idx in 0..t.len() {
        let mass = t.mass(idx);
        if mass.is_zero() || t.gap(idx) * dd.clone() > dn.clone() * mass.clone() {
            continue;
        }
        checked += 1;
        for b in [false, true] {
            // Pr_μ[C] = mass/D, Pr_{μ_b}[C] = part/P_b
            let lhs = mass.clone() * t.total(b).clone() * dd.clone();
            let rhs = t.part(idx, b).clone() * denom.clone();
            let ok_a = lhs <= up.clone() * rhs.clone();
            let ok_b = lhs >= down.clone() * rhs;
            visit(idx, b, ok_a, ok_b);
        }
    }
    Some(checked)
}

/// `(checked subcubes, violated inequalities)` or `None` if the hypothesis fails.
pub(crate) fn unbias_counts<I: Int>(t: &SplitTable<I>, dn: &I, dd: &I) -> Option<(usize, usize)> {
    let mut bad = 0;
    let checked = unbias_scan(t, dn, dd, |_, _, a, b| bad += (!a) as usize + (!b) as usize)?;
    Some((checked, bad))
}

/// Checks both inequalities of the unbias claim on every subcube with positive
/// mass and bias at most `δ`.
pub fn verify_unbias(g: &TruthTable, mu: &Dist, delta: &Rational) -> Result<UnbiasReport> {
    if !delta.is_positive() || *delta > ratio(1, 2) {
        return Err(QcError::InvalidParameter(format!(
            "δ = {} must lie in (0, 1/2]",
            fmt_rational(delta)
        )));
    }
    let split = AnySplit::new(g, mu)?;
    let arity = g.arity();
    let mut violations = Vec::new();
    let mut ratios: Vec<Rational> = Vec::new();
    let mut collect = |t_mass: Rational, restricted: Option<Rational>| {
        if let Some(r) = restricted.filter(|r| !r.is_zero()) {
            ratios.push(t_mass / r);
        }
    };
    let mut record = |idx: usize, b: bool, ok_a: bool, ok_b: bool| {
        for (ok, part) in [(ok_a, ClaimPart::A), (ok_b, ClaimPart::B)] {
            if !ok {
                violations.push(UnbiasViolation {
                    subcube: Subcube::from_ternary_index(arity, idx),
                    b,
                    part,
                });
            }
        }
    };
    let mut pairs = Vec::new();
    let checked = match (&split, small_enough(delta)) {
        (AnySplit::Small(t), true) => {
            let (dn, dd) = parts::<i128>(delta);
            unbias_scan(t, &dn, &dd, |i, b, x, y| {
                record(i, b, x, y);
                pairs.push((i, b));
            })
        }
        (AnySplit::Small(_), false) => {
            let w = widen(g, mu);
            let (dn, dd) = (delta.numer().clone(), delta.denom().clone());
            unbias_scan(&w, &dn, &dd, |i, b, x, y| {
                record(i, b, x, y);
                pairs.push((i, b));
            })
        }
        (AnySplit::Big(t), _) => {
            let (dn, dd) = (delta.numer().clone(), delta.denom().clone());
            unbias_scan(t, &dn, &dd, |i, b, x, y| {
                record(i, b, x, y);
                pairs.push((i, b));
            })
        }
    }
    .ok_or_else(|| {
        QcError::HypothesisViolated(format!(
            "full-cube bias exceeds δ = {}",
            fmt_rational(delta)
        ))
    })?;
    for (idx, b) in pairs {
        let c = Subcube::from_ternary_index(arity, idx);
        collect(split.mass(&c), split.restricted(&c, b));
    }
    Ok(UnbiasReport {
        delta: delta.clone(),
        subcubes_checked: checked,
        violations,
        min_ratio: ratios.iter().min().cloned(),
        max_ratio: ratios.iter().max().cloned(),
    })
}

/// Per-subcube flags of the event `codim(C) < c` and `bias(C) ≥ 2·sqrt(δ)`,
/// tested as `bias² ≥ 4δ` with `δ = dn/dd`.
pub(crate) fn rbias_events<I: Int>(t: &SplitTable<I>, c: usize, dn: &I, dd: &I) -> Vec<bool> {
    let four_dn = I::from(4) * dn.clone();
    (0..t.len())
        .map(|idx| t.codim(idx) < c && t.bias_sq_at_least(idx, &four_dn, dd))
        .collect()
}

/// Scaled event masses under `μ`, `μ_0`, `μ_1` (the latter before dividing by `P_b`).
fn rbias_leaf_sums<I: Int>(t: &SplitTable<I>, events: &[bool], leaves: impl Iterator<Item = usize>) -> (I, [I; 2]) {
    let (mut a, mut b0, mut b1) = (I::zero(), I::zero(), I::zero());
    for idx in leaves {
        if events[idx] {
            a = a + &t.mass(idx);
            b0 = b0 + t.part(idx, false);
            b1 = b1 + t.part(idx, true);
        }
    }
    (a, [b0, b1])
}

/// Largest event masses over all read-once trees of depth at most `depth`,
/// each part maximized separately.
pub(crate) fn rbias_worst<I: Int>(t: &SplitTable<I>, events: &[bool], depth: usize) -> (I, [I; 2]) {
    let arity = t.arity();
    let size = t.len();
    let weight = |k: usize, idx: usize| -> I {
        if !events[idx] {
            return I::zero();
        }
        match k {
            0 => t.mass(idx),
            1 => t.part(idx, false).clone(),
            _ => t.part(idx, true).clone(),
        }
    };
    let mut best: [Vec<I>; 3] = [Vec::with_capacity(size), Vec::with_capacity(size), Vec::with_capacity(size)];
    let mut digits = vec![0u8; arity];
    for idx in 0..size {
        let codim = t.codim(idx);
        for (k, table) in best.iter_mut().enumerate() {
            if codim > depth {
                table.push(I::zero());
                continue;
            }
            let mut v = weight(k, idx);
            if codim < depth {
                for (j, _) in digits.iter().enumerate().filter(|(_, &d)| d == 2) {
                    let step = pow3(j);
                    let cand = table[idx - 2 * step].clone() + &table[idx - step];
                    if cand > v {
                        v = cand;
                    }
                }
            }
            table.push(v);
        }
        crate::scaled::increment_ternary(&mut digits);
    }
    let full = size - 1;
    let [a, b0, b1] = best;
    (a[full].clone(), [b0[full].clone(), b1[full].clone()])
}

/// Strict bounds: `E_μ < sqrt(δ)` and `E_{μ_b} < 4·sqrt(δ)`, via squares.
pub(crate) fn rbias_pass<I: Int>(t: &SplitTable<I>, sums: &(I, [I; 2]), dn: &I, dd: &I) -> (bool, [bool; 2]) {
    let d = t.denom().clone();
    let (a, b) = sums;
    let pass_a = a.clone() * a.clone() * dd.clone() < dn.clone() * d.clone() * d;
    let pass_b = [false, true].map(|bit| {
        let s = &b[bit as usize];
        let p = t.total(bit).clone();
        s.clone() * s.clone() * dd.clone() < I::from(16) * dn.clone() * p.clone() * p
    });
    (pass_a, pass_b)
}

/// Whether the full-cube proposition holds at `ε = en/ed` given `D^μ_ε(g)`:
/// complexity 0, or `min_b Pr[g=b] > ε` and `bias < 1 − 2ε`.
pub(crate) fn fullbias_holds<I: Int>(t: &SplitTable<I>, complexity: usize, en: &I, ed: &I) -> bool {
    if complexity == 0 {
        return true;
    }
    let d = t.denom().clone();
    let min = t.total(false).clone().min(t.total(true).clone());
    let full = t.full_index();
    min * ed.clone() > en.clone() * d.clone()
        && t.gap(full) * ed.clone() < (ed.clone() - I::from(2) * en.clone()) * d
}

/// Outcome of the R->bias check on one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct RbiasReport {
    pub epsilon: Rational,
    pub delta: Rational,
    /// `sqrt(δ)` when rational.
    pub sqrt_delta: Option<Rational>,
    pub inner_complexity: usize,
    /// `Pr_{y~μ}[codim(ℓ_y) < c and bias(ℓ_y) ≥ 2·sqrt(δ)]`.
    pub part_a: Rational,
    /// The same event under `μ_0` and `μ_1`.
    pub part_b: [Rational; 2],
    pub pass_a: bool,
    pub pass_b: [bool; 2],
}

impl RbiasReport {
    pub fn passed(&self) -> bool {
        self.pass_a && self.pass_b.iter().all(|&p| p)
    }
}

/// Precomputed per-subcube data for checking many trees against one `(g, μ, ε)`.
#[derive(Debug, Clone)]
pub struct RbiasContext {
    epsilon: Rational,
    delta: Rational,
    c: usize,
    split: SplitTable<BigInt>,
    events: Vec<bool>,
}

impl RbiasContext {
    /// Requires `ε ∈ [1/4, 1/2)` and `c = D^μ_ε(g) > 0`.
    pub fn new(g: &TruthTable, mu: &Dist, epsilon: &Rational) -> Result<Self> {
        if *epsilon < ratio(1, 4) || *epsilon >= ratio(1, 2) {
            return Err(QcError::HypothesisViolated(format!(
                "ε = {} is outside [1/4, 1/2)",
                fmt_rational(epsilon)
            )));
        }
        let c = dist_complexity(g, mu, epsilon)?;
        if c == 0 {
            return Err(QcError::HypothesisViolated("D^mu_eps(g) = 0".into()));
        }
        let delta = ratio(1, 2) - epsilon;
        let (w, d) = crate::split::integer_weights(mu);
        let split = SplitTable::from_weights(g, &w, d);
        let (dn, dd) = (delta.numer().clone(), delta.denom().clone());
        let events = rbias_events(&split, c, &dn, &dd);
        Ok(RbiasContext {
            epsilon: epsilon.clone(),
            delta,
            c,
            split,
            events,
        })
    }

    pub fn inner_complexity(&self) -> usize {
        self.c
    }

    fn report(&self, sums: (BigInt, [BigInt; 2])) -> RbiasReport {
        let (dn, dd) = (self.delta.numer().clone(), self.delta.denom().clone());
        let (pass_a, pass_b) = rbias_pass(&self.split, &sums, &dn, &dd);
        let t = &self.split;
        let (a, [b0, b1]) = sums;
        RbiasReport {
            epsilon: self.epsilon.clone(),
            delta: self.delta.clone(),
            sqrt_delta: exact_sqrt(&self.delta),
            inner_complexity: self.c,
            part_a: Rational::new(a, t.denom().clone()),
            part_b: [
                Rational::new(b0, t.total(false).clone()),
                Rational::new(b1, t.total(true).clone()),
            ],
            pass_a,
            pass_b,
        }
    }

    /// Checks one tree on `m` bits; labels are ignored. Zero-mass leaves add nothing.
    pub fn check(&self, tree: &DecisionTree) -> Result<RbiasReport> {
        if tree.arity() != self.split.arity() {
            return Err(QcError::ArityMismatch {
                expected: self.split.arity(),
                found: tree.arity(),
            });
        }
        let leaves = (0..tree.num_leaves())
            .map(|l| Ok(tree.path_subcube(tree.leaf_node(l)?)?.ternary_index()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.report(rbias_leaf_sums(&self.split, &self.events, leaves.into_iter())))
    }

    /// The largest event masses over every tree of depth at most `depth`
    /// (each part maximized on its own). If this passes, every such tree passes.
    pub fn worst_case(&self, depth: usize) -> RbiasReport {
        self.report(rbias_worst(&self.split, &self.events, depth))
    }
}

/// Checks the R->bias claim, parts (a) and (b), for one tree on `m` bits.
pub fn verify_rbias(g: &TruthTable, mu: &Dist, epsilon: &Rational, tree: &DecisionTree) -> Result<RbiasReport> {
    RbiasContext::new(g, mu, epsilon)?.check(tree)
}
