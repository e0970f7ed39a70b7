use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::caps::Caps;
use crate::dist::Dist;
use crate::dtree::DecisionTree;
use crate::error::{QcError, Result};
use crate::problem::QueryProblem;
use crate::rational::{fmt_rational, one, Rational};
use crate::scaled::rational_parts;
use crate::truth_table::TruthTable;

use super::dp::{check_epsilon, dist_complexity, LeafValues};

/// Adversary distributions are rounded to multiples of `2^-QUANTUM_BITS`.
pub const QUANTUM_BITS: u32 = 24;
const QUANTUM: u128 = 1 << QUANTUM_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketOutcome {
    /// Some adversary holds every depth-d tree below `1 − ε`: exact proof that `R_ε > d`.
    Rejected,
    /// The averaged algorithm reaches `1 − ε − tol` with the bracket closed.
    Accepted,
    IterationLimit,
}

/// Value bracket obtained at one candidate depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBracket {
    pub depth: usize,
    pub lower: Rational,
    pub upper: Rational,
    pub iterations: usize,
    pub outcome: BracketOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameResult {
    pub depth: usize,
    /// Guaranteed success of the uniform mixture of best responses, on every input.
    pub lower_value: Rational,
    /// Best-response value against the hardest adversary found.
    pub upper_value: Rational,
    pub hard_dist: Dist,
    pub best_tree: DecisionTree,
    /// Rounds summed over all candidate depths.
    pub iterations: usize,
    pub brackets: Vec<DepthBracket>,
    /// `lower_value ≥ 1 − ε`, so `R_ε ≤ depth` holds without slack.
    pub exact_upper: bool,
    pub converged: bool,
}

struct DepthRun {
    bracket: DepthBracket,
    /// Adversary achieving `upper`, with the best response against it.
    hardest: Vec<u128>,
    hardest_tree: DecisionTree,
}

/// Quantizes nonnegative floats to integers summing to `QUANTUM` (largest remainder,
/// ties to the lowest index).
fn quantize(w: &[f64]) -> Vec<u128> {
    let total: f64 = w.iter().sum();
    let scaled: Vec<f64> = w.iter().map(|&v| v / total * QUANTUM as f64).collect();
    let mut out: Vec<u128> = scaled.iter().map(|&v| v.floor() as u128).collect();
    let assigned: u128 = out.iter().sum();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let missing = QUANTUM.saturating_sub(assigned) as usize;
    for &i in order.iter().cycle().take(missing) {
        out[i] += 1;
    }
    out
}

fn play_depth(
    h: &(impl QueryProblem + ?Sized),
    masks: &[u64],
    depth: usize,
    target: &Rational,
    tol: &Rational,
    max_iter: usize,
) -> DepthRun {
    let arity = h.arity();
    let n = 1usize << arity;
    let eta = (tol.to_f64().unwrap_or(0.0) / 4.0).clamp(1e-12, 0.5);
    let log_keep = (1.0 - eta).ln();
    let denom = QUANTUM;
    // target = tn / td; compare v / denom against it exactly
    let (tn, td): (u128, u128) = rational_parts(target).expect("target is a small rational");
    let slack_target = (target - tol).max(Rational::zero());
    let (sn, sd): (u128, u128) = rational_parts(&slack_target).expect("small rational");
    let (toln, told): (u128, u128) = rational_parts(tol).unwrap_or((1, 1));

    let mut counts = vec![0u64; n];
    let mut best_upper: Option<u128> = None;
    let mut hardest = Vec::new();
    let mut hardest_tree = None;
    let mut rounds = 0usize;
    let mut outcome = BracketOutcome::IterationLimit;

    while rounds < max_iter {
        let min_count = *counts.iter().min().unwrap();
        let w: Vec<f64> = counts
            .iter()
            .map(|&c| ((c - min_count) as f64 * log_keep).exp())
            .collect();
        let mu = quantize(&w);
        let leaves = LeafValues::new(arity, h.alphabet_size(), masks, &mu);
        let solved = leaves.solve(depth);
        let value = *solved.value();
        rounds += 1;
        for (x, c) in counts.iter_mut().enumerate() {
            if h.accepts(x as u64, solved.answer(x as u64)) {
                *c += 1;
            }
        }
        if best_upper.is_none_or(|b| value < b) {
            best_upper = Some(value);
            hardest = mu;
            hardest_tree = Some(solved.witness());
        }
        let upper = best_upper.unwrap();
        // exact rejection: upper / denom < tn / td
        if upper * td < tn * denom {
            outcome = BracketOutcome::Rejected;
            break;
        }
        // lower = min_count / rounds
        let lower = *counts.iter().min().unwrap() as u128;
        let r = rounds as u128;
        let lower_ok = lower * sd >= sn * r;
        // upper/denom − lower/r ≤ toln/told
        let gap_ok = (upper * r).saturating_sub(lower * denom) * told <= toln * denom * r;
        if lower_ok && gap_ok {
            outcome = BracketOutcome::Accepted;
            break;
        }
    }
    let lower_count = *counts.iter().min().unwrap();
    DepthRun {
        bracket: DepthBracket {
            depth,
            lower: Rational::new(lower_count.into(), rounds.max(1).into()),
            upper: Rational::new(best_upper.unwrap_or(denom).into(), denom.into()),
            iterations: rounds,
            outcome,
        },
        hardest,
        hardest_tree: hardest_tree.expect("at least one round is played"),
    }
}

fn quantized_dist(arity: usize, weights: &[u128]) -> Dist {
    let w: Vec<u64> = weights.iter().map(|&v| v as u64).collect();
    Dist::from_weights(arity, &w).expect("quantized weights sum to the quantum")
}

/// Estimates `R_ε(h)` by the minimax game at increasing depths.
///
/// At each depth the adversary runs multiplicative weights with learning rate
/// `tol/4` against exact best responses. A depth is rejected when some
/// adversary keeps every tree of that depth below `1 − ε` (exact), and
/// accepted once the averaged algorithm reaches `1 − ε − tol` with the value
/// bracket narrower than `tol`. Hence `R_ε(h) ≥ depth` always, and
/// `R_{ε+tol}(h) ≤ depth`.
pub fn rand_complexity<P: QueryProblem + ?Sized>(
    h: &P,
    eps: &Rational,
    tol: &Rational,
    max_iter: usize,
) -> Result<GameResult> {
    check_epsilon(eps)?;
    if !tol.is_positive() || *tol > one() {
        return Err(QcError::InvalidParameter(format!(
            "tol = {} must lie in (0, 1]",
            fmt_rational(tol)
        )));
    }
    if max_iter == 0 {
        return Err(QcError::InvalidParameter("max_iter must be positive".into()));
    }
    let arity = h.arity();
    Caps::check("dynamic program arity", arity, Caps::current().dp)?;
    // keeps the per-round integer comparisons inside u128
    let small = |r: &Rational| r.denom().bits() <= 32;
    if !small(eps) || !small(tol) || max_iter > u32::MAX as usize {
        return Err(QcError::InvalidParameter(
            "ε and tol need denominators below 2^32, max_iter below 2^32".into(),
        ));
    }
    let masks: Vec<u64> = (0..1u64 << arity).map(|x| h.accepted_mask(x)).collect();
    let target = one() - eps;
    let mut brackets = Vec::new();
    let mut total = 0usize;
    let mut last_rejected: Option<Vec<u128>> = None;
    for depth in 0..=arity {
        let run = play_depth(h, &masks, depth, &target, tol, max_iter);
        total += run.bracket.iterations;
        brackets.push(run.bracket.clone());
        match run.bracket.outcome {
            BracketOutcome::Rejected => last_rejected = Some(run.hardest),
            outcome => {
                let hard = match (&last_rejected, depth) {
                    (Some(w), d) if d > 0 => w.clone(),
                    _ => run.hardest.clone(),
                };
                let result = GameResult {
                    depth,
                    exact_upper: run.bracket.lower >= target,
                    lower_value: run.bracket.lower,
                    upper_value: run.bracket.upper,
                    hard_dist: quantized_dist(arity, &hard),
                    best_tree: run.hardest_tree,
                    iterations: total,
                    brackets,
                    converged: outcome == BracketOutcome::Accepted,
                };
                return match outcome {
                    BracketOutcome::Accepted => Ok(result),
                    _ => Err(QcError::IterationLimit(Box::new(result))),
                };
            }
        }
    }
    // Full depth solves any total relation, so it is never rejected.
    Err(QcError::Unachievable {
        target: fmt_rational(&target),
    })
}

/// Hard adversary distribution with its exact certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct HardDistribution {
    pub dist: Dist,
    pub game: GameResult,
    /// `D^{dist}_ε(g)`, computed exactly; never below `game.depth`.
    pub certified_depth: usize,
}

/// Runs the game and certifies the returned adversary: `D^{μ*}_ε(g) ≥ depth`.
pub fn hard_distribution(
    g: &TruthTable,
    eps: &Rational,
    tol: &Rational,
    max_iter: usize,
) -> Result<HardDistribution> {
    let game = rand_complexity(g, eps, tol, max_iter)?;
    let certified_depth = dist_complexity(g, &game.hard_dist, eps)?;
    if certified_depth < game.depth {
        return Err(QcError::CertificateFailed(format!(
            "D^mu*_eps = {certified_depth} is below the game depth {}",
            game.depth
        )));
    }
    Ok(HardDistribution {
        dist: game.hard_dist.clone(),
        game,
        certified_depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn tol() -> Rational {
        ratio(1, 100)
    }

    #[test]
    fn quantize_sums_to_quantum() {
        let q = quantize(&[1.0, 1.0, 1.0]);
        assert_eq!(q.iter().sum::<u128>(), QUANTUM);
        assert_eq!(q[0], q[2] + 1);
        assert_eq!(quantize(&[1.0, 0.0]), vec![QUANTUM, 0]);
    }

    #[test]
    fn identity_needs_one_query() {
        let r = rand_complexity(&TruthTable::identity(), &ratio(1, 3), &tol(), 10_000).unwrap();
        assert_eq!(r.depth, 1);
        assert!(r.exact_upper);
        assert_eq!(r.hard_dist, Dist::uniform(1).unwrap());
        assert_eq!(r.brackets[0].outcome, BracketOutcome::Rejected);
    }

    #[test]
    fn xor_needs_two_queries() {
        let g = TruthTable::xor(2).unwrap();
        let r = rand_complexity(&g, &ratio(1, 3), &tol(), 10_000).unwrap();
        assert_eq!(r.depth, 2);
        let hd = hard_distribution(&g, &ratio(1, 3), &tol(), 10_000).unwrap();
        assert_eq!(hd.certified_depth, 2);
    }

    #[test]
    fn constant_needs_nothing() {
        let g = TruthTable::constant(3, true).unwrap();
        let r = rand_complexity(&g, &ratio(1, 4), &tol(), 10).unwrap();
        assert_eq!(r.depth, 0);
        assert_eq!(r.lower_value, one());
        let hd = hard_distribution(&g, &ratio(1, 3), &tol(), 10).unwrap();
        assert_eq!(hd.certified_depth, 0);
    }

    #[test]
    fn boundary_game_values() {
        // one-query value of AND2 and MAJ3 is 2/3, accepted at ε = 1/3
        for g in [TruthTable::and(2).unwrap(), TruthTable::majority(3).unwrap()] {
            let r = rand_complexity(&g, &ratio(1, 3), &tol(), 200_000).unwrap();
            assert_eq!(r.depth, 1);
            assert!(r.lower_value <= ratio(2, 3) && ratio(2, 3) <= r.upper_value);
            assert!(&r.upper_value - &r.lower_value <= tol());
            let hd = hard_distribution(&g, &ratio(1, 3), &tol(), 200_000).unwrap();
            assert!(hd.certified_depth >= 1);
        }
    }

    #[test]
    fn brackets_are_ordered() {
        let g = TruthTable::from_code(3, 0b1001_0110).unwrap();
        let r = rand_complexity(&g, &ratio(1, 4), &ratio(1, 50), 50_000).unwrap();
        for b in &r.brackets {
            assert!(b.lower <= b.upper);
        }
    }

    #[test]
    fn iteration_limit_returns_partial_result() {
        let g = TruthTable::and(2).unwrap();
        match rand_complexity(&g, &ratio(1, 3), &ratio(1, 1000), 3) {
            Err(QcError::IterationLimit(partial)) => {
                assert!(!partial.converged);
                assert_eq!(partial.iterations, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_parameters() {
        let g = TruthTable::identity();
        assert!(rand_complexity(&g, &ratio(1, 2), &tol(), 10).is_err());
        assert!(rand_complexity(&g, &ratio(1, 3), &Rational::zero(), 10).is_err());
    }
}
