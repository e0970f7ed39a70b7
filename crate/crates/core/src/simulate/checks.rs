use num_traits::{Signed, Zero};

use crate::compose::ComposedInstance;
use crate::dtree::DecisionTree;
use crate::error::{QcError, Result};
use crate::problem::QueryProblem;
use crate::rational::{clamp_nonneg, fmt_rational, one, pow, ratio, Rational};
use crate::subcube::Subcube;

use super::aprime::{check_inputs, copy_paths, leaf_q, Simulator};
use super::leaves::{leaf_p, leaf_snips, leaf_z_queries};

#[derive(Debug, Clone, PartialEq)]
pub struct SimileafReport {
    pub z: u64,
    pub theta: Rational,
    /// `max(0, 1−4θ)^n`.
    pub lower_factor: Rational,
    /// `(1+4θ)^n`; this direction is reconstructed from the upper unbias inequality.
    pub upper_factor: Rational,
    pub leaves_checked: usize,
    pub snipped_leaves: usize,
    /// Leaf ids violating the lower or upper bound.
    pub lower_violations: Vec<usize>,
    pub upper_violations: Vec<usize>,
    /// Extremes of `q/p` over snip-free leaves with `p > 0`.
    pub min_ratio: Option<Rational>,
    pub max_ratio: Option<Rational>,
    /// Informational: `8/9·p ≤ q ≤ 10/9·p` on every snip-free leaf.
    pub fixed_constants_hold: bool,
}

impl SimileafReport {
    pub fn passed(&self) -> bool {
        self.lower_violations.is_empty() && self.upper_violations.is_empty()
    }
}

fn full_bias(inst: &ComposedInstance) -> Rational {
    inst.split()
        .bias(&Subcube::full(inst.m()))
        .expect("the full cube has mass 1")
}

/// Checks `max(0,1−4θ)^n·p ≤ q ≤ (1+4θ)^n·p` on every leaf with `snip(ℓ) = 0`
/// (snip threshold `θ`). Requires `θ ≤ 1/2` and full-cube bias at most `θ`.
pub fn verify_simileaf(
    inst: &ComposedInstance,
    tree: &DecisionTree,
    z: u64,
    theta: &Rational,
) -> Result<SimileafReport> {
    check_inputs(inst, tree, z)?;
    if theta.is_negative() || *theta > ratio(1, 2) {
        return Err(QcError::HypothesisViolated(format!(
            "θ = {} is outside [0, 1/2]",
            fmt_rational(theta)
        )));
    }
    let fb = full_bias(inst);
    if fb > *theta {
        return Err(QcError::HypothesisViolated(format!(
            "full-cube bias {} exceeds θ = {}",
            fmt_rational(&fb),
            fmt_rational(theta)
        )));
    }
    let n = inst.n();
    let four_theta = theta * ratio(4, 1);
    let lower_factor = pow(&clamp_nonneg(one() - &four_theta), n);
    let upper_factor = pow(&(one() + &four_theta), n);
    let (lo_fixed, hi_fixed) = (ratio(8, 9), ratio(10, 9));
    let mut report = SimileafReport {
        z,
        theta: theta.clone(),
        lower_factor,
        upper_factor,
        leaves_checked: 0,
        snipped_leaves: 0,
        lower_violations: Vec::new(),
        upper_violations: Vec::new(),
        min_ratio: None,
        max_ratio: None,
        fixed_constants_hold: true,
    };
    for (leaf, per_copy) in copy_paths(inst, tree)?.iter().enumerate() {
        if leaf_snips(inst, per_copy, theta).iter().any(|&s| s) {
            report.snipped_leaves += 1;
            continue;
        }
        report.leaves_checked += 1;
        let p = leaf_p(inst, per_copy, z);
        let q = leaf_q(inst, per_copy, z)?;
        if q < &report.lower_factor * &p {
            report.lower_violations.push(leaf);
        }
        if q > &report.upper_factor * &p {
            report.upper_violations.push(leaf);
        }
        if q < &lo_fixed * &p || q > &hi_fixed * &p {
            report.fixed_constants_hold = false;
        }
        if !p.is_zero() {
            let r = &q / &p;
            if report.min_ratio.as_ref().is_none_or(|m| r < *m) {
                report.min_ratio = Some(r.clone());
            }
            if report.max_ratio.as_ref().is_none_or(|m| r > *m) {
                report.max_ratio = Some(r);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LilsnipReport {
    pub z: u64,
    pub delta0: Rational,
    /// `Σ_{snip^{(i)}(ℓ)=1} p_ℓ^z` for each copy.
    pub per_copy: Vec<Rational>,
    /// Each per-copy sum is at most `4·sqrt(δ₀)`.
    pub per_copy_pass: Vec<bool>,
    /// `Σ_{snip(ℓ)=1} p_ℓ^z`.
    pub aggregate: Rational,
    /// Aggregate at most `n·4·sqrt(δ₀)`.
    pub aggregate_pass: bool,
    /// At `ε = 1/2 − 1/n⁴`, `θ = 2/n²`: aggregate at most `4/n`.
    pub fixed_bound_pass: Option<bool>,
}

impl LilsnipReport {
    pub fn passed(&self) -> bool {
        self.aggregate_pass && self.per_copy_pass.iter().all(|&p| p)
    }
}

/// Snipped `γ^z`-mass per copy against `4·sqrt(δ₀)`, compared through squares.
/// Requires `ε ≥ 1/4` and `θ ≥ 2·sqrt(δ₀)`.
pub fn verify_lilsnip(inst: &ComposedInstance, tree: &DecisionTree, z: u64) -> Result<LilsnipReport> {
    check_inputs(inst, tree, z)?;
    if *inst.epsilon() < ratio(1, 4) {
        return Err(QcError::HypothesisViolated(format!(
            "ε = {} is below 1/4",
            fmt_rational(inst.epsilon())
        )));
    }
    let delta0 = inst.delta0();
    let theta = inst.theta();
    if theta * theta < &delta0 * ratio(4, 1) {
        return Err(QcError::HypothesisViolated(format!(
            "θ = {} is below 2·sqrt(δ₀)",
            fmt_rational(theta)
        )));
    }
    let n = inst.n();
    let mut per_copy = vec![Rational::zero(); n];
    let mut aggregate = Rational::zero();
    for per_copy_path in copy_paths(inst, tree)? {
        let flags = leaf_snips(inst, &per_copy_path, theta);
        if !flags.iter().any(|&s| s) {
            continue;
        }
        let p = leaf_p(inst, &per_copy_path, z);
        for (i, _) in flags.iter().enumerate().filter(|(_, &s)| s) {
            per_copy[i] += &p;
        }
        aggregate += p;
    }
    let sixteen_delta = &delta0 * ratio(16, 1);
    let per_copy_pass = per_copy.iter().map(|s| s * s <= sixteen_delta).collect();
    let nn = Rational::from_integer((n as i64 * n as i64).into());
    let aggregate_pass = &aggregate * &aggregate <= &sixteen_delta * nn;
    let fixed_bound_pass = inst
        .at_default_parameters()
        .then(|| aggregate <= ratio(4, n as i64));
    Ok(LilsnipReport {
        z,
        delta0,
        per_copy,
        per_copy_pass,
        aggregate,
        aggregate_pass,
        fixed_bound_pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessChainReport {
    /// (i) `Σ_z λ(z) Σ_{(z,b_ℓ)∈f} p_ℓ^z`, the success of `B` under `γ`.
    pub success_b: Rational,
    /// (ii) `Σ_z λ(z) Σ_{(z,b_ℓ)∈f} q_ℓ^z`, the success of `A′`.
    pub success_aprime: Rational,
    /// `Σ_z λ(z)·Σ_{snip(ℓ)=1} p_ℓ^z`.
    pub snipped_mass: Rational,
    /// (iii) `max(0,1−4θ)^n·(success_b − snipped_mass)`.
    pub lower_bound: Rational,
    /// (ii) ≥ (iii).
    pub holds: bool,
    /// Most `z` bits queried on any leaf `A′` reaches with positive probability.
    pub worst_z_queries: usize,
    pub expected_z_queries: Rational,
    /// `floor(depth(B) / c)`.
    pub z_query_budget: usize,
    pub budget_ok: bool,
    /// Informational: `success_aprime ≥ 5/9`.
    pub at_least_five_ninths: bool,
}

pub fn success_chain(inst: &ComposedInstance, tree: &DecisionTree) -> Result<SuccessChainReport> {
    check_inputs(inst, tree, 0)?;
    let n = inst.n();
    let paths = copy_paths(inst, tree)?;
    let labels = (0..tree.num_leaves())
        .map(|l| tree.leaf_label(l))
        .collect::<Result<Vec<_>>>()?;
    let snipped: Vec<bool> = paths
        .iter()
        .map(|p| leaf_snips(inst, p, inst.theta()).iter().any(|&s| s))
        .collect();
    let zq: Vec<usize> = paths.iter().map(|p| leaf_z_queries(inst, p)).collect();
    let mut success_b = Rational::zero();
    let mut success_aprime = Rational::zero();
    let mut snipped_mass = Rational::zero();
    let mut expected_z_queries = Rational::zero();
    let mut worst_z_queries = 0;
    for z in inst.lambda().support() {
        let lam = inst.lambda().prob(z);
        for (leaf, per_copy) in paths.iter().enumerate() {
            let p = leaf_p(inst, per_copy, z);
            let q = leaf_q(inst, per_copy, z)?;
            let accepted = inst.f().accepts(z, labels[leaf]);
            if accepted {
                success_b += lam * &p;
                success_aprime += lam * &q;
            }
            if snipped[leaf] {
                snipped_mass += lam * &p;
            }
            if !q.is_zero() {
                worst_z_queries = worst_z_queries.max(zq[leaf]);
                expected_z_queries += lam * &q * Rational::from_integer((zq[leaf] as i64).into());
            }
        }
    }
    let four_theta = inst.theta() * ratio(4, 1);
    let factor = pow(&clamp_nonneg(one() - four_theta), n);
    let lower_bound = factor * (&success_b - &snipped_mass);
    let z_query_budget = tree.depth() / inst.inner_complexity();
    Ok(SuccessChainReport {
        holds: success_aprime >= lower_bound,
        at_least_five_ninths: success_aprime >= ratio(5, 9),
        budget_ok: worst_z_queries <= z_query_budget,
        success_b,
        success_aprime,
        snipped_mass,
        lower_bound,
        worst_z_queries,
        expected_z_queries,
        z_query_budget,
    })
}

/// Best fixed-seed derandomization of `A′` found within a seed budget.
///
/// This is an engineering stand-in: it searches a finite set of seeds and is
/// not the algorithm whose existence follows from averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSearch {
    pub best_seed: u64,
    /// Exact `Σ_z λ(z)·[(z, A_seed(z)) ∈ f]` for the best seed.
    pub success: Rational,
    pub seeds_tried: u64,
    /// Most `z` bits the derandomized algorithm queries on any `z`.
    pub worst_z_queries: usize,
}

pub fn seed_search(inst: &ComposedInstance, tree: &DecisionTree, seeds: u64) -> Result<SeedSearch> {
    if seeds == 0 {
        return Err(QcError::InvalidParameter("seed budget must be positive".into()));
    }
    let support: Vec<u64> = inst.lambda().support().collect();
    let sims = support
        .iter()
        .map(|&z| Simulator::new(inst, tree, z))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<SeedSearch> = None;
    for seed in 0..seeds {
        let mut success = Rational::zero();
        let mut worst = 0;
        for (sim, &z) in sims.iter().zip(&support) {
            let t = sim.run(seed)?;
            worst = worst.max(t.z_queries.len());
            if inst.f().accepts(z, t.output) {
                success += inst.lambda().prob(z);
            }
        }
        if best.as_ref().is_none_or(|b| success > b.success) {
            best = Some(SeedSearch {
                best_seed: seed,
                success,
                seeds_tried: seeds,
                worst_z_queries: worst,
            });
        }
    }
    Ok(best.expect("at least one seed"))
}
