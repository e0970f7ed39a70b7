use num_bigint::BigUint;
use num_traits::Signed;

use crate::caps::Caps;
use crate::dist::Dist;
use crate::dtree::{DecisionTree, Label, TreeSpec};
use crate::error::{QcError, Result};
use crate::problem::QueryProblem;
use crate::rational::{fmt_rational, one, ratio, Rational};
use crate::scaled::{
    cmp_products_w, increment_ternary, pow3, rational_parts, subcube_codims, subcube_masses,
    with_scaled, Scaled, Weight,
};

/// Best achievable success at a depth budget, with a tree achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct DpResult {
    pub success: Rational,
    pub witness: DecisionTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Choice {
    /// Codimension above the budget; never visited.
    Unreached,
    Leaf(Label),
    Query(usize),
}

/// Per-subcube mass of the best constant answer. Ties go to the lowest label.
pub(crate) struct LeafValues<W> {
    arity: usize,
    best: Vec<W>,
    best_label: Vec<Label>,
}

impl<W: Weight> LeafValues<W> {
    pub(crate) fn new(arity: usize, alphabet: usize, masks: &[u64], weights: &[W]) -> Self {
        let mut best: Vec<W> = Vec::new();
        let mut best_label = vec![0; pow3(arity)];
        for r in 0..alphabet {
            let masses = subcube_masses(arity, |x| {
                if masks[x as usize] >> r & 1 == 1 {
                    weights[x as usize].clone()
                } else {
                    W::zero()
                }
            });
            if r == 0 {
                best = masses;
                continue;
            }
            for (idx, m) in masses.into_iter().enumerate() {
                if m > best[idx] {
                    best[idx] = m;
                    best_label[idx] = r;
                }
            }
        }
        LeafValues {
            arity,
            best,
            best_label,
        }
    }

    /// value(C) = max(best answer on C, max_i value(C, x_i=0) + value(C, x_i=1)),
    /// where the recursion only queries while codim(C) < depth. Ties prefer
    /// answering, then the lowest variable.
    pub(crate) fn solve(&self, depth: usize) -> Solved<W> {
        let arity = self.arity;
        let depth = depth.min(arity);
        let size = pow3(arity);
        let codims = subcube_codims(arity);
        let mut value: Vec<W> = Vec::with_capacity(size);
        let mut choice = Vec::with_capacity(size);
        let mut digits = vec![0u8; arity];
        for idx in 0..size {
            let s = codims[idx] as usize;
            if s > depth {
                value.push(W::zero());
                choice.push(Choice::Unreached);
            } else {
                let mut best = self.best[idx].clone();
                let mut pick = Choice::Leaf(self.best_label[idx]);
                if s < depth {
                    for (j, _) in digits.iter().enumerate().filter(|(_, &d)| d == 2) {
                        let step = pow3(j);
                        let cand = value[idx - 2 * step].clone() + &value[idx - step];
                        if cand > best {
                            best = cand;
                            pick = Choice::Query(j);
                        }
                    }
                }
                value.push(best);
                choice.push(pick);
            }
            increment_ternary(&mut digits);
        }
        Solved {
            arity,
            value,
            choice,
        }
    }
}

pub(crate) struct Solved<W> {
    arity: usize,
    value: Vec<W>,
    choice: Vec<Choice>,
}

impl<W: Weight> Solved<W> {
    fn full_index(&self) -> usize {
        pow3(self.arity) - 1
    }

    /// Optimal mass at the full cube.
    pub(crate) fn value(&self) -> &W {
        &self.value[self.full_index()]
    }

    /// Runs the optimal tree on `x` without materializing it.
    #[inline]
    pub(crate) fn answer(&self, x: u64) -> Label {
        let mut idx = self.full_index();
        loop {
            match self.choice[idx] {
                Choice::Leaf(r) => return r,
                Choice::Query(j) => {
                    let bit = (x >> j & 1) as usize;
                    idx = idx - 2 * pow3(j) + bit * pow3(j);
                }
                Choice::Unreached => unreachable!("the optimal tree stays within budget"),
            }
        }
    }

    pub(crate) fn witness(&self) -> DecisionTree {
        fn build(s: &[Choice], idx: usize) -> TreeSpec {
            match s[idx] {
                Choice::Leaf(r) => TreeSpec::leaf(r),
                Choice::Query(j) => {
                    let step = pow3(j);
                    let base = idx - 2 * step;
                    TreeSpec::query(j, build(s, base), build(s, base + step))
                }
                Choice::Unreached => unreachable!("the optimal tree stays within budget"),
            }
        }
        let spec = build(&self.choice, self.full_index());
        DecisionTree::new(self.arity, &spec).expect("dynamic program builds read-once trees")
    }
}

fn check_inputs<P: QueryProblem + ?Sized>(h: &P, mu: &Dist) -> Result<()> {
    if h.arity() != mu.arity() {
        return Err(QcError::ArityMismatch {
            expected: h.arity(),
            found: mu.arity(),
        });
    }
    Caps::check("dynamic program arity", h.arity(), Caps::current().dp)
}

fn masks<P: QueryProblem + ?Sized>(h: &P) -> Vec<u64> {
    (0..1u64 << h.arity()).map(|x| h.accepted_mask(x)).collect()
}

/// Maximum over depth-bounded deterministic trees of `Pr_{x~μ}[(x, T(x)) ∈ h]`,
/// exactly, with an optimal witness. `depth` above the arity is clamped.
pub fn best_success<P: QueryProblem + ?Sized>(h: &P, mu: &Dist, depth: usize) -> Result<DpResult> {
    check_inputs(h, mu)?;
    let masks = masks(h);
    Ok(with_scaled!(mu, |s| {
        let leaves = LeafValues::new(h.arity(), h.alphabet_size(), &masks, &s.weights);
        let solved = leaves.solve(depth);
        DpResult {
            success: s.to_rational(solved.value()),
            witness: solved.witness(),
        }
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistComplexity {
    pub depth: usize,
    pub result: DpResult,
}

pub(crate) fn check_epsilon(eps: &Rational) -> Result<()> {
    if eps.is_negative() || *eps >= ratio(1, 2) {
        return Err(QcError::InvalidParameter(format!(
            "ε = {} must lie in [0, 1/2)",
            fmt_rational(eps)
        )));
    }
    Ok(())
}

fn smallest_depth<W: Weight>(
    s: &Scaled<W>,
    arity: usize,
    alphabet: usize,
    masks: &[u64],
    target: &Rational,
) -> Option<(usize, Solved<W>)> {
    let (num, den): (W, W) = rational_parts(target)?;
    let leaves = LeafValues::new(arity, alphabet, masks, &s.weights);
    (0..=arity).find_map(|d| {
        let solved = leaves.solve(d);
        // value / denom >= num / den
        (cmp_products_w(&[solved.value(), &den], &[&num, &s.denom]) != std::cmp::Ordering::Less)
            .then_some((d, solved))
    })
}

/// `D^μ_ε(h)` with an optimal tree at that depth.
pub fn dist_complexity_witness<P: QueryProblem + ?Sized>(
    h: &P,
    mu: &Dist,
    eps: &Rational,
) -> Result<DistComplexity> {
    check_inputs(h, mu)?;
    check_epsilon(eps)?;
    let masks = masks(h);
    let target = one() - eps;
    let unachievable = || QcError::Unachievable {
        target: fmt_rational(&target),
    };
    let (arity, alphabet) = (h.arity(), h.alphabet_size());
    match mu.scaled() {
        crate::scaled::AnyScaled::Small(s) => {
            match smallest_depth(&s, arity, alphabet, &masks, &target) {
                Some((depth, solved)) => Ok(DistComplexity {
                    depth,
                    result: DpResult {
                        success: s.to_rational(solved.value()),
                        witness: solved.witness(),
                    },
                }),
                // the target's parts may not fit u128; retry wide
                None => dist_complexity_big(arity, alphabet, &masks, mu, &target)
                    .ok_or_else(unachievable),
            }
        }
        crate::scaled::AnyScaled::Big(_) => {
            dist_complexity_big(arity, alphabet, &masks, mu, &target).ok_or_else(unachievable)
        }
    }
}

fn dist_complexity_big(
    arity: usize,
    alphabet: usize,
    masks: &[u64],
    mu: &Dist,
    target: &Rational,
) -> Option<DistComplexity> {
    let s: Scaled<BigUint> = match mu.scaled() {
        crate::scaled::AnyScaled::Small(s) => Scaled {
            denom: BigUint::from(s.denom),
            weights: s.weights.iter().map(|&w| BigUint::from(w)).collect(),
        },
        crate::scaled::AnyScaled::Big(s) => s,
    };
    let (depth, solved) = smallest_depth(&s, arity, alphabet, masks, target)?;
    Some(DistComplexity {
        depth,
        result: DpResult {
            success: s.to_rational(solved.value()),
            witness: solved.witness(),
        },
    })
}

/// `D^μ_ε(h)`: the least depth whose best success reaches `1 − ε` (non-strict).
pub fn dist_complexity<P: QueryProblem + ?Sized>(h: &P, mu: &Dist, eps: &Rational) -> Result<usize> {
    dist_complexity_witness(h, mu, eps).map(|d| d.depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::Relation;
    use crate::truth_table::TruthTable;

    #[test]
    fn best_success_examples() {
        let id = TruthTable::identity();
        let u1 = Dist::uniform(1).unwrap();
        assert_eq!(best_success(&id, &u1, 0).unwrap().success, ratio(1, 2));
        assert_eq!(best_success(&id, &u1, 1).unwrap().success, ratio(1, 1));

        let and = TruthTable::and(2).unwrap();
        let r = best_success(&and, &Dist::uniform(2).unwrap(), 0).unwrap();
        assert_eq!(r.success, ratio(3, 4));
        assert_eq!(r.witness.to_string(), "(leaf 0)");
        // depth above arity is clamped
        assert_eq!(best_success(&and, &Dist::uniform(2).unwrap(), 7).unwrap().success, ratio(1, 1));
    }

    #[test]
    fn dist_complexity_examples() {
        let id = TruthTable::identity();
        assert_eq!(dist_complexity(&id, &Dist::uniform(1).unwrap(), &ratio(1, 4)).unwrap(), 1);
        let and = TruthTable::and(2).unwrap();
        assert_eq!(dist_complexity(&and, &Dist::uniform(2).unwrap(), &ratio(1, 3)).unwrap(), 0);
        let xor = TruthTable::xor(2).unwrap();
        let u2 = Dist::uniform(2).unwrap();
        assert_eq!(best_success(&xor, &u2, 1).unwrap().success, ratio(1, 2));
        assert_eq!(dist_complexity(&xor, &u2, &ratio(1, 4)).unwrap(), 2);
        assert!(dist_complexity(&xor, &u2, &ratio(1, 2)).is_err());
    }

    #[test]
    fn tie_breaking_is_deterministic() {
        // XOR at full depth: every variable order works, lowest index wins
        let xor = TruthTable::xor(2).unwrap();
        let r = best_success(&xor, &Dist::uniform(2).unwrap(), 2).unwrap();
        assert_eq!(r.witness.to_string(), "(q 1 (q 2 (leaf 0) (leaf 1)) (q 2 (leaf 1) (leaf 0)))");
        // a relation accepting everything: answer immediately with label 0
        let full = Relation::full(2, 3).unwrap();
        let r = best_success(&full, &Dist::uniform(2).unwrap(), 2).unwrap();
        assert_eq!(r.witness.to_string(), "(leaf 0)");
    }

    #[test]
    fn witness_achieves_value() {
        let g = TruthTable::majority(3).unwrap();
        let mu = Dist::from_weights(3, &[5, 1, 2, 3, 1, 4, 2, 6]).unwrap();
        for depth in 0..=3 {
            let r = best_success(&g, &mu, depth).unwrap();
            assert!(r.witness.depth() <= depth);
            let achieved = mu.mass_where(|x| r.witness.evaluate(x).unwrap().label == g.get(x) as usize);
            assert_eq!(achieved, r.success);
        }
    }

    #[test]
    fn arity_mismatch() {
        let g = TruthTable::and(2).unwrap();
        assert!(matches!(
            best_success(&g, &Dist::uniform(3).unwrap(), 1),
            Err(QcError::ArityMismatch { .. })
        ));
    }
}
