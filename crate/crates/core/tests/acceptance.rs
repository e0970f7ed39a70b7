//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every derived quantity is checked against an oracle written here from
//! first principles (explicit tree enumeration, explicit enumeration of the
//! simulator's random choices, direct sums over points), not against library
//! internals.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::rc::Rc;
use std::time::Instant;

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qclab_core::dtree::{DecisionTree, NodeKind, TreeSpec};
use qclab_core::rational::{ratio, to_f64};
use qclab_core::simulate::{
    exact_q, run_aprime, success_chain, verify_lilsnip, verify_simileaf, verify_unbias, Simulator,
};
use qclab_core::sweep::{
    all_functions, fullbias_sweep, grid_weights, random_functions, rbias_sweep, sample_grid_weights,
    unbias_sweep, SweepSummary,
};
use qclab_core::{
    best_success, dist_complexity, hard_distribution, rand_complexity, xor_stack, ComposedInstance,
    Dist, InstanceParams, QcError, Rational, Relation, TruthTable, ZeroMassPolicy,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn summary_line(s: &SweepSummary) -> String {
    format!(
        "{} fixtures ({} skipped by hypothesis), {} checks, {} violations",
        s.fixtures,
        s.skipped,
        s.checks,
        s.violations.len()
    )
}

fn sweep_outcome(parts: &[SweepSummary]) -> Outcome {
    let text: Vec<String> = parts.iter().map(summary_line).collect();
    for s in parts {
        ensure(s.checks > 0, || format!("{}: nothing checked", s.claim))?;
        if let Some(v) = s.violations.first() {
            return Err(format!("{}; first violation: {v}", text.join("; ")));
        }
    }
    Ok(text.join("; "))
}

// ---------------------------------------------------------------------------
// Independent oracles

mod oracle {
    use super::*;

    /// A read-once decision tree shape; labels are chosen per leaf.
    pub enum Shape {
        Leaf,
        Query(usize, Rc<Shape>, Rc<Shape>),
    }

    /// Every read-once tree over the variables in `free` with depth at most `depth`.
    pub struct Shapes {
        memo: HashMap<(u64, usize), Rc<Vec<Rc<Shape>>>>,
    }

    impl Shapes {
        pub fn new() -> Self {
            Shapes {
                memo: HashMap::new(),
            }
        }

        pub fn all(&mut self, free: u64, depth: usize) -> Rc<Vec<Rc<Shape>>> {
            if let Some(v) = self.memo.get(&(free, depth)) {
                return v.clone();
            }
            let mut out = vec![Rc::new(Shape::Leaf)];
            if depth > 0 {
                for v in 0..64 {
                    if free >> v & 1 == 0 {
                        continue;
                    }
                    let sub = self.all(free & !(1 << v), depth - 1);
                    for a in sub.iter() {
                        for b in sub.iter() {
                            out.push(Rc::new(Shape::Query(v, a.clone(), b.clone())));
                        }
                    }
                }
            }
            let out = Rc::new(out);
            self.memo.insert((free, depth), out.clone());
            out
        }
    }

    /// Weighted success of the best labelling of `shape` on the given points.
    pub fn shape_value(shape: &Shape, pts: &[(u64, u128)], accept: &dyn Fn(u64) -> u64, alphabet: usize) -> u128 {
        match shape {
            Shape::Leaf => (0..alphabet)
                .map(|r| {
                    pts.iter()
                        .filter(|(x, _)| accept(*x) >> r & 1 == 1)
                        .map(|(_, w)| w)
                        .sum::<u128>()
                })
                .max()
                .unwrap_or(0),
            Shape::Query(v, a, b) => {
                let (zero, one): (Vec<_>, Vec<_>) = pts.iter().partition(|(x, _)| x >> v & 1 == 0);
                shape_value(a, &zero, accept, alphabet) + shape_value(b, &one, accept, alphabet)
            }
        }
    }

    /// Brute-force best weighted success over all trees of depth at most `depth`.
    pub fn best(arity: usize, weights: &[u128], accept: &dyn Fn(u64) -> u64, alphabet: usize, depth: usize) -> u128 {
        let pts: Vec<(u64, u128)> = weights
            .iter()
            .enumerate()
            .map(|(x, &w)| (x as u64, w))
            .filter(|(_, w)| *w > 0)
            .collect();
        let mut shapes = Shapes::new();
        shapes
            .all((1u64 << arity) - 1, depth)
            .iter()
            .map(|s| shape_value(s, &pts, accept, alphabet))
            .max()
            .unwrap_or(0)
    }

    /// Smallest depth whose brute-force success reaches `1 − ε`.
    pub fn dist_complexity(g: &TruthTable, weights: &[u128], eps: &Rational) -> usize {
        let total: u128 = weights.iter().sum();
        let accept = |x: u64| 1u64 << (g.get(x) as u64);
        let target = (Rational::from_integer(1.into()) - eps) * Rational::from_integer(total.into());
        (0..=g.arity())
            .find(|&d| Rational::from_integer(best(g.arity(), weights, &accept, 2, d).into()) >= target)
            .expect("full depth always succeeds")
    }

    /// `μ(C ∩ filter)` by direct summation over the points of `{0,1}^m`.
    fn mass(mu: &Dist, mask: u64, val: u64, filter: &dyn Fn(u64) -> bool) -> Rational {
        mu.probs()
            .iter()
            .enumerate()
            .filter(|(x, _)| (*x as u64) & mask == val && filter(*x as u64))
            .map(|(_, p)| p.clone())
            .sum()
    }

    /// Leaf law of the simulator obtained by walking every branch of its
    /// randomness: for the `k`-th copy-`i` query, the child is drawn from `μ`
    /// when `k < c` and from `μ_{z_i}` when `k ≥ c` (falling back to `μ` when
    /// `μ_{z_i}` puts no mass on the current copy subcube).
    pub fn aprime_law(inst: &ComposedInstance, tree: &DecisionTree, z: u64) -> Vec<Rational> {
        let (n, m, c) = (inst.n(), inst.m(), inst.inner_complexity());
        let mu = inst.mu();
        let g = inst.g();
        let mut law = vec![Rational::zero(); tree.num_leaves()];
        let mut stack = vec![(tree.root(), vec![(0u64, 0u64); n], vec![0usize; n], Rational::from_integer(1.into()))];
        while let Some((id, cubes, counts, prob)) = stack.pop() {
            match tree.node(id).unwrap().kind {
                NodeKind::Leaf { leaf_id, .. } => law[leaf_id] += prob,
                NodeKind::Query { var, children } => {
                    let (i, j) = (var / m, var % m);
                    let (mask, val) = cubes[i];
                    let k = counts[i] + 1;
                    let zi = z >> i & 1 == 1;
                    let all = |_: u64| true;
                    let cond = |x: u64| g.get(x) == zi;
                    let mut filter: &dyn Fn(u64) -> bool = &all;
                    if k >= c && !mass(mu, mask, val, &cond).is_zero() {
                        filter = &cond;
                    }
                    let denom = mass(mu, mask, val, filter);
                    for (bit, child) in children.iter().enumerate() {
                        let p = if denom.is_zero() {
                            Rational::zero()
                        } else {
                            mass(mu, mask | 1 << j, val | (bit as u64) << j, filter) / &denom
                        };
                        let mut next = cubes.clone();
                        next[i] = (mask | 1 << j, val | (bit as u64) << j);
                        let mut cnt = counts.clone();
                        cnt[i] = k;
                        stack.push((*child, next, cnt, &prob * p));
                    }
                }
            }
        }
        law
    }

    /// Number of `z` bits the simulator queries on the way to each leaf.
    pub fn z_queries_per_leaf(tree: &DecisionTree, n: usize, m: usize, c: usize) -> Vec<usize> {
        let mut out = vec![0; tree.num_leaves()];
        let mut stack = vec![(tree.root(), vec![0usize; n])];
        while let Some((id, counts)) = stack.pop() {
            match tree.node(id).unwrap().kind {
                NodeKind::Leaf { leaf_id, .. } => out[leaf_id] = counts.iter().filter(|&&k| k >= c).count(),
                NodeKind::Query { var, children } => {
                    let mut cnt = counts.clone();
                    cnt[var / m] += 1;
                    for child in children {
                        stack.push((child, cnt.clone()));
                    }
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Fixture generation shared by the simulator criteria

const SHAPES: [(usize, usize); 8] = [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (4, 2), (5, 2), (2, 5)];

/// `(ε, θ = 2·sqrt(1/2 − ε))` pairs with rational `θ`.
fn eps_theta() -> Vec<(Rational, Rational)> {
    [(4, 1), (16, 4), (36, 6), (64, 8), (144, 12)]
        .into_iter()
        .map(|(d, r)| (ratio(1, 2) - ratio(1, d), ratio(2, r)))
        .collect()
}

fn random_weights(rng: &mut ChaCha8Rng, len: usize, lo: u64, hi: u64) -> Vec<u64> {
    loop {
        let w: Vec<u64> = (0..len).map(|_| rng.random_range(lo..=hi)).collect();
        if w.iter().any(|&x| x > 0) {
            return w;
        }
    }
}

fn random_nonconstant(rng: &mut ChaCha8Rng, m: usize) -> TruthTable {
    loop {
        let code = rng.random_range(0..1u64 << (1 << m));
        let g = TruthTable::from_code(m, code).unwrap();
        if !g.is_constant() {
            return g;
        }
    }
}

/// Full-support `μ` with `Pr_μ[g = 0] = Pr_μ[g = 1] = 1/2`.
fn balanced_mu(rng: &mut ChaCha8Rng, g: &TruthTable) -> Dist {
    let m = g.arity();
    let w = random_weights(rng, 1 << m, 1, 6);
    let side = |b: bool| -> u64 { (0..1u64 << m).filter(|&x| g.get(x) == b).map(|x| w[x as usize]).sum() };
    let (s0, s1) = (side(false), side(true));
    let scaled: Vec<u64> = (0..1u64 << m)
        .map(|x| w[x as usize] * if g.get(x) { s0 } else { s1 })
        .collect();
    Dist::from_weights(m, &scaled).unwrap()
}

fn random_tree(rng: &mut ChaCha8Rng, arity: usize, alphabet: usize, max_depth: usize) -> DecisionTree {
    fn build(rng: &mut ChaCha8Rng, free: &mut Vec<usize>, alphabet: usize, depth: usize) -> TreeSpec {
        if depth == 0 || free.is_empty() || rng.random_bool(0.15) {
            return TreeSpec::leaf(rng.random_range(0..alphabet));
        }
        let k = rng.random_range(0..free.len());
        let v = free.swap_remove(k);
        let a = build(rng, &mut free.clone(), alphabet, depth - 1);
        let b = build(rng, &mut free.clone(), alphabet, depth - 1);
        TreeSpec::query(v, a, b)
    }
    let mut free: Vec<usize> = (0..arity).collect();
    let spec = build(rng, &mut free, alphabet, max_depth);
    DecisionTree::new(arity, &spec).unwrap()
}

struct Fixture {
    label: String,
    inst: ComposedInstance,
    tree: DecisionTree,
}

/// Instances through the library pipeline: `μ` is either a balanced full-support
/// grid distribution or the certified hard distribution; `B` is either the
/// exact optimum for `f∘g^n` under `γ` at some depth or a random read-once tree.
fn build_fixture(rng: &mut ChaCha8Rng, n: usize, m: usize, eps: &Rational, hard_mu: bool) -> Option<Fixture> {
    let g = random_nonconstant(rng, m);
    let (mu, mu_kind) = if hard_mu && m <= 3 {
        match hard_distribution(&g, eps, &ratio(1, 100), 50_000) {
            Ok(h) => (h.dist, "hard"),
            Err(_) => return None,
        }
    } else if *eps == ratio(1, 4) && rng.random_bool(0.5) {
        (Dist::from_weights(m, &random_weights(rng, 1 << m, 1, 6)).unwrap(), "grid")
    } else {
        (balanced_mu(rng, &g), "balanced")
    };
    let f = match rng.random_range(0..4) {
        0 => Relation::from_function(&TruthTable::and(n).unwrap()),
        1 => Relation::from_function(&TruthTable::xor(n).unwrap()),
        2 => Relation::from_function(&random_nonconstant(rng, n)),
        _ => {
            let masks: Vec<u64> = (0..1u64 << n).map(|_| rng.random_range(1..8u64)).collect();
            Relation::from_masks(n, 3, masks).unwrap()
        }
    };
    let lambda = if rng.random_bool(0.5) {
        Dist::uniform(n).unwrap()
    } else {
        Dist::from_weights(n, &random_weights(rng, 1 << n, 0, 5)).unwrap()
    };
    let params = InstanceParams {
        epsilon: Some(eps.clone()),
        theta: None,
        policy: ZeroMassPolicy::FallbackToMu,
    };
    let inst = match ComposedInstance::new(f, g, mu, lambda, params) {
        Ok(i) => i,
        Err(QcError::InnerComplexityZero) | Err(QcError::ZeroConditioningMass(_)) => return None,
        Err(e) => panic!("instance construction failed: {e}"),
    };
    let nm = n * m;
    let (tree, tree_kind) = if rng.random_bool(0.5) {
        let depth = rng.random_range(1..=nm.min(6));
        let rel = inst.composed_relation().unwrap();
        let gamma = inst.gamma().unwrap().expand().unwrap();
        (best_success(&rel, &gamma, depth).unwrap().witness, format!("optimal depth {depth}"))
    } else {
        let depth = rng.random_range(1..=nm);
        (random_tree(rng, nm, inst.f().alphabet(), depth), format!("random depth ≤ {depth}"))
    };
    Some(Fixture {
        label: format!(
            "n={n} m={m} eps={} c={} mu={mu_kind} B={tree_kind}",
            qclab_core::rational::fmt_rational(eps),
            inst.inner_complexity()
        ),
        inst,
        tree,
    })
}

fn fixtures(count: usize, seed: u64, eps_choices: &[Rational]) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count {
        let (n, m) = SHAPES[k % SHAPES.len()];
        let eps = &eps_choices[(k / SHAPES.len()) % eps_choices.len()];
        let hard = k % 3 == 2;
        k += 1;
        if let Some(f) = build_fixture(&mut rng, n, m, eps, hard) {
            out.push(f);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Criteria

fn criterion_1() -> Outcome {
    let deltas = [ratio(1, 8), ratio(1, 4), ratio(1, 2)];
    let mut parts = Vec::new();
    for m in 1..=3 {
        parts.push(unbias_sweep(&all_functions(m), &grid_weights(m, 6), &deltas));
    }
    let sampled_g = random_functions(4, 200, 0x5eed_0001).map_err(|e| e.to_string())?;
    let sampled_mu = sample_grid_weights(4, 6, 400, 0x5eed_0002);
    parts.push(unbias_sweep(&sampled_g, &sampled_mu, &deltas));

    // direct rational recheck over m ≤ 2, independent of the integer tables
    let mut rechecked = 0u64;
    for m in 1..=2 {
        for g in all_functions(m) {
            for w in grid_weights(m, 6) {
                let mu = Dist::from_weights(m, &w).unwrap();
                for delta in &deltas {
                    let (checked, bad) = unbias_direct(&g, &mu, delta);
                    let lib = verify_unbias(&g, &mu, delta);
                    match (checked, lib) {
                        (None, Err(QcError::HypothesisViolated(_))) => {}
                        (Some(k), Ok(r)) => {
                            ensure(bad == 0 && r.violations.is_empty(), || format!("violation at g={g:?} mu={w:?}"))?;
                            ensure(r.subcubes_checked == k, || {
                                format!("subcube counts differ at g={g:?} mu={w:?}: {} vs {k}", r.subcubes_checked)
                            })?;
                            rechecked += 4 * k as u64;
                        }
                        (a, b) => return Err(format!("hypothesis disagreement at g={g:?} mu={w:?}: {a:?} vs {b:?}")),
                    }
                }
            }
        }
    }
    sweep_outcome(&parts).map(|s| format!("{s}; {rechecked} inequalities rechecked directly"))
}

/// Counts subcubes meeting the hypotheses and the inequalities they violate.
fn unbias_direct(g: &TruthTable, mu: &Dist, delta: &Rational) -> (Option<usize>, usize) {
    let m = g.arity();
    let one = Rational::from_integer(1.into());
    let bias = |mask: u64, val: u64| -> Option<Rational> {
        let (mut p0, mut p1) = (Rational::zero(), Rational::zero());
        for x in 0..1u64 << m {
            if x & mask == val {
                if g.get(x) {
                    p1 += mu.prob(x);
                } else {
                    p0 += mu.prob(x);
                }
            }
        }
        let t = &p0 + &p1;
        (!t.is_zero()).then(|| (p0 - p1).abs() / t)
    };
    match bias(0, 0) {
        Some(b) if b <= *delta => {}
        _ => return (None, 0),
    }
    let side = |b: bool| -> Rational { (0..1u64 << m).filter(|&x| g.get(x) == b).map(|x| mu.prob(x).clone()).sum() };
    let (s0, s1) = (side(false), side(true));
    let four = ratio(4, 1);
    let (mut checked, mut bad) = (0, 0);
    for code in 0..3usize.pow(m as u32) {
        let (mut mask, mut val, mut c) = (0u64, 0u64, code);
        for j in 0..m {
            match c % 3 {
                0 => {
                    mask |= 1 << j;
                }
                1 => {
                    mask |= 1 << j;
                    val |= 1 << j;
                }
                _ => {}
            }
            c /= 3;
        }
        let Some(b) = bias(mask, val) else { continue };
        if b > *delta {
            continue;
        }
        checked += 1;
        let pc: Rational = (0..1u64 << m).filter(|x| x & mask == val).map(|x| mu.prob(x).clone()).sum();
        for (bit, s) in [(false, &s0), (true, &s1)] {
            let pb: Rational = (0..1u64 << m)
                .filter(|&x| x & mask == val && g.get(x) == bit)
                .map(|x| mu.prob(x).clone())
                .sum::<Rational>()
                / s;
            if pc > (&one + &four * delta) * &pb || pc < (&one - &four * delta) * &pb {
                bad += 1;
            }
        }
    }
    (Some(checked), bad)
}

fn criterion_2() -> Outcome {
    let eps = [ratio(1, 4), ratio(7, 16)];
    let parts: Vec<SweepSummary> = (1..=3)
        .map(|m| rbias_sweep(&all_functions(m), &grid_weights(m, 6), &eps, 3))
        .collect();
    // explicit per-tree recheck at m ≤ 2 with exact rationals
    let mut rechecked = 0u64;
    let mut shapes = oracle::Shapes::new();
    for m in 1..=2usize {
        let all = shapes.all((1 << m) - 1, m);
        for g in all_functions(m) {
            for w in grid_weights(m, 6) {
                let weights: Vec<u128> = w.iter().map(|&x| x as u128).collect();
                let mu = Dist::from_weights(m, &w).unwrap();
                for e in &eps {
                    let c = oracle::dist_complexity(&g, &weights, e);
                    if c == 0 {
                        continue;
                    }
                    for shape in all.iter() {
                        let (a, b) = rbias_direct(&g, &mu, e, c, shape);
                        ensure(a && b, || format!("rbias violated: g={g:?} mu={w:?} eps={e}"))?;
                        rechecked += 1;
                    }
                }
            }
        }
    }
    sweep_outcome(&parts).map(|s| format!("{s}; {rechecked} trees rechecked directly"))
}

/// Parts (a) and (b) for one tree shape, computed leaf by leaf.
fn rbias_direct(g: &TruthTable, mu: &Dist, eps: &Rational, c: usize, shape: &oracle::Shape) -> (bool, bool) {
    let m = g.arity();
    let delta = ratio(1, 2) - eps;
    let mut leaves = Vec::new();
    fn collect(s: &oracle::Shape, mask: u64, val: u64, out: &mut Vec<(u64, u64)>) {
        match s {
            oracle::Shape::Leaf => out.push((mask, val)),
            oracle::Shape::Query(v, a, b) => {
                collect(a, mask | 1 << v, val, out);
                collect(b, mask | 1 << v, val | 1 << v, out);
            }
        }
    }
    collect(shape, 0, 0, &mut leaves);
    let mass = |mask: u64, val: u64, f: &dyn Fn(u64) -> bool| -> Rational {
        (0..1u64 << m).filter(|&x| x & mask == val && f(x)).map(|x| mu.prob(x).clone()).sum()
    };
    let all = |_: u64| true;
    let is0 = |x: u64| !g.get(x);
    let is1 = |x: u64| g.get(x);
    let (t0, t1) = (mass(0, 0, &is0), mass(0, 0, &is1));
    let (mut pa, mut pb0, mut pb1) = (Rational::zero(), Rational::zero(), Rational::zero());
    for (mask, val) in leaves {
        let total = mass(mask, val, &all);
        if total.is_zero() || (mask.count_ones() as usize) >= c {
            continue;
        }
        let (a0, a1) = (mass(mask, val, &is0), mass(mask, val, &is1));
        let bias = (&a0 - &a1).abs() / &total;
        // bias ≥ 2·sqrt(δ)
        if &bias * &bias >= ratio(4, 1) * &delta {
            pa += total;
            pb0 += a0 / &t0;
            pb1 += a1 / &t1;
        }
    }
    // strict: P < sqrt(δ), P_b < 4·sqrt(δ)
    let a = &pa * &pa < delta;
    let b = [pb0, pb1].iter().all(|p| p * p < ratio(16, 1) * &delta);
    (a, b)
}

fn criterion_3() -> Outcome {
    let eps = [ratio(1, 4), ratio(1, 3), ratio(5, 12), ratio(7, 16)];
    let parts: Vec<SweepSummary> = (1..=3)
        .map(|m| fullbias_sweep(&all_functions(m), &grid_weights(m, 6), &eps))
        .collect();
    // direct recheck at m ≤ 2 with the brute-force complexity oracle
    let mut rechecked = 0u64;
    for m in 1..=2usize {
        for g in all_functions(m) {
            for w in grid_weights(m, 6) {
                let weights: Vec<u128> = w.iter().map(|&x| x as u128).collect();
                let total: u128 = weights.iter().sum();
                for e in &eps {
                    if oracle::dist_complexity(&g, &weights, e) == 0 {
                        continue;
                    }
                    let s1: u128 = (0..1u64 << m).filter(|&x| g.get(x)).map(|x| weights[x as usize]).sum();
                    let p1 = Rational::new(s1.into(), total.into());
                    let p0 = Rational::from_integer(1.into()) - &p1;
                    let min = p0.clone().min(p1.clone());
                    let bias = (p0 - p1).abs();
                    ensure(min > *e && bias < Rational::from_integer(1.into()) - ratio(2, 1) * e, || {
                        format!("fullbias violated: g={g:?} mu={w:?} eps={e}")
                    })?;
                    rechecked += 1;
                }
            }
        }
    }
    sweep_outcome(&parts).map(|s| format!("{s}; {rechecked} fixtures rechecked directly"))
}

type DpFixture = (usize, usize, Vec<u64>, Vec<u64>, usize);

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let fixtures: Vec<DpFixture> = (0..500)
        .map(|_| {
            let arity = rng.random_range(1..=4usize);
            let alphabet = rng.random_range(1..=3usize);
            let masks: Vec<u64> = (0..1 << arity).map(|_| rng.random_range(1..1u64 << alphabet)).collect();
            let weights = random_weights(&mut rng, 1 << arity, 0, 4);
            let depth = rng.random_range(0..=arity);
            (arity, alphabet, masks, weights, depth)
        })
        .collect();
    let mismatches: Vec<String> = fixtures
        .par_iter()
        .enumerate()
        .filter_map(|(k, (arity, alphabet, masks, weights, depth))| {
            let rel = Relation::from_masks(*arity, *alphabet, masks.clone()).unwrap();
            let mu = Dist::from_weights(*arity, weights).unwrap();
            let dp = best_success(&rel, &mu, *depth).unwrap();
            let w128: Vec<u128> = weights.iter().map(|&x| x as u128).collect();
            let accept = |x: u64| masks[x as usize];
            let best = oracle::best(*arity, &w128, &accept, *alphabet, *depth);
            let total: u64 = weights.iter().sum();
            let expected = Rational::new(best.into(), total.into());
            let witness_ok = dp.witness.depth() <= *depth;
            (dp.success != expected || !witness_ok).then(|| format!("fixture {k}: dp {} vs oracle {expected}", dp.success))
        })
        .collect();
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok("500 fixtures, exact agreement with the tree-enumeration oracle".into())
}

fn to_weights(d: &Dist) -> Vec<u128> {
    let lcm = d
        .probs()
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, p| num_integer::Integer::lcm(&acc, p.denom()));
    d.probs()
        .iter()
        .map(|p| (p * Rational::from_integer(lcm.clone())).to_integer().to_u128().unwrap())
        .collect()
}

fn criterion_5() -> Outcome {
    let eps = ratio(1, 3);
    let tol = ratio(1, 100);
    let functions = [
        ("identity1", TruthTable::identity()),
        ("xor2", TruthTable::xor(2).unwrap()),
        ("and2", TruthTable::and(2).unwrap()),
        ("maj3", TruthTable::majority(3).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut lines = Vec::new();
    for (name, g) in &functions {
        let hard = hard_distribution(g, &eps, &tol, 200_000).map_err(|e| format!("{name}: {e}"))?;
        let depth = hard.game.depth;
        let oracle_cert = oracle::dist_complexity(g, &to_weights(&hard.dist), &eps);
        ensure(hard.certified_depth >= depth && oracle_cert == hard.certified_depth, || {
            format!(
                "{name}: certificate {} (oracle {oracle_cert}) vs depth {depth}",
                hard.certified_depth
            )
        })?;
        let mut worst = 0;
        for _ in 0..100 {
            let w = random_weights(&mut rng, 1 << g.arity(), 0, 12);
            let mu = Dist::from_weights(g.arity(), &w).unwrap();
            let d = dist_complexity(g, &mu, &eps).map_err(|e| e.to_string())?;
            let w128: Vec<u128> = w.iter().map(|&x| x as u128).collect();
            let od = oracle::dist_complexity(g, &w128, &eps);
            ensure(d == od, || format!("{name}: dist_complexity {d} vs oracle {od} at {w:?}"))?;
            ensure(d <= depth, || format!("{name}: D^mu = {d} exceeds depth {depth} at {w:?}"))?;
            worst = worst.max(d);
        }
        lines.push(format!("{name}: depth {depth}, certificate {}, max sampled D {worst}", hard.certified_depth));
    }
    Ok(lines.join("; "))
}

/// Leaf-wise 4σ test of Monte-Carlo counts against exact probabilities.
fn within_four_sigma(q: &[Rational], counts: &[u64], samples: u64) -> bool {
    let n = samples as f64;
    q.iter().zip(counts).all(|(p, &k)| {
        let p = to_f64(p);
        let sigma = (n * p * (1.0 - p)).sqrt();
        (k as f64 - n * p).abs() <= 4.0 * sigma
    })
}

fn criterion_6_and_7() -> (Outcome, Outcome) {
    let eps: Vec<Rational> = eps_theta().into_iter().map(|(e, _)| e).collect();
    let fx = fixtures(50, 0x5eed_0006, &eps);
    let samples = 100_000u64;
    let mut exact_checks = 0usize;
    let mut retries = 0usize;
    let mut traces = 0u64;
    let mut budget_violations = Vec::new();
    let mut exact_err = None;
    let mut mc_err = None;
    for (k, f) in fx.iter().enumerate() {
        let (n, m, c) = (f.inst.n(), f.inst.m(), f.inst.inner_complexity());
        let budget = f.tree.depth() / c;
        let per_leaf = oracle::z_queries_per_leaf(&f.tree, n, m, c);
        for z in 0..1u64 << n {
            let q = match exact_q(&f.inst, &f.tree, z) {
                Ok(q) => q,
                Err(e) => {
                    exact_err.get_or_insert(format!("{}: {e}", f.label));
                    continue;
                }
            };
            let oracle = oracle::aprime_law(&f.inst, &f.tree, z);
            if q != oracle {
                exact_err.get_or_insert(format!("{} z={z}: exact_q differs from enumeration", f.label));
            }
            if q.iter().sum::<Rational>() != Rational::from_integer(1.into()) {
                exact_err.get_or_insert(format!("{} z={z}: exact_q does not sum to 1", f.label));
            }
            exact_checks += q.len();
            for seed in 0..50u64 {
                let t = run_aprime(&f.inst, &f.tree, z, seed).unwrap();
                traces += 1;
                if t.z_queries.len() > budget || t.z_queries.len() != per_leaf[t.leaf] {
                    budget_violations.push(format!("{} z={z} seed={seed}", f.label));
                }
            }
        }
        let z = (k as u64 * 0x9E37) % (1 << n);
        let sim = Simulator::new(&f.inst, &f.tree, z).unwrap();
        let q = exact_q(&f.inst, &f.tree, z).unwrap();
        let mut ok = false;
        for attempt in 0..2u64 {
            let counts = sim.leaf_counts(0x5eed_0600 + 1000 * attempt + k as u64, samples).unwrap();
            traces += counts.samples;
            if counts.max_z_queries > budget {
                budget_violations.push(format!("{} z={z} monte carlo", f.label));
            }
            if within_four_sigma(&q, &counts.counts, samples) {
                ok = true;
                break;
            }
            retries += 1;
        }
        if !ok {
            mc_err.get_or_insert(format!("{} z={z}: two consecutive 4σ failures", f.label));
        }
        let chain = success_chain(&f.inst, &f.tree).unwrap();
        if chain.worst_z_queries > budget || !chain.budget_ok {
            budget_violations.push(format!("{}: exact worst case {}", f.label, chain.worst_z_queries));
        }
    }
    let six = match (exact_err, mc_err) {
        (None, None) => Ok(format!(
            "{} instances, {exact_checks} leaf probabilities equal to the enumeration oracle; \
             Monte Carlo at {samples} samples within 4σ ({retries} retries used)",
            fx.len()
        )),
        (a, b) => Err(a.or(b).unwrap()),
    };
    let seven = if budget_violations.is_empty() {
        Ok(format!("{traces} traces, worst-case bound depth/c never exceeded"))
    } else {
        Err(format!("{} violations, first: {}", budget_violations.len(), budget_violations[0]))
    };
    (six, seven)
}

fn criterion_8() -> Outcome {
    let pairs = eps_theta();
    let eps: Vec<Rational> = pairs.iter().map(|(e, _)| e.clone()).collect();
    let fx = fixtures(160, 0x5eed_0008, &eps);
    let results: Vec<Result<(usize, usize, usize), String>> = fx
        .par_iter()
        .map(|f| {
            let theta = f.inst.theta().clone();
            let sq = &theta * &theta;
            ensure(sq == ratio(4, 1) * f.inst.delta0(), || format!("{}: θ is not 2·sqrt(δ₀)", f.label))?;
            let mut simi = 0;
            let mut lil = 0;
            for z in 0..1u64 << f.inst.n() {
                if theta <= ratio(1, 2) {
                    let r = verify_simileaf(&f.inst, &f.tree, z, &theta).map_err(|e| format!("{}: {e}", f.label))?;
                    ensure(r.passed(), || format!("{} z={z}: simileaf violated", f.label))?;
                    simi += r.leaves_checked;
                }
                let l = verify_lilsnip(&f.inst, &f.tree, z).map_err(|e| format!("{}: {e}", f.label))?;
                ensure(l.per_copy_pass.iter().all(|&p| p) && l.aggregate_pass, || {
                    format!("{} z={z}: lilsnip violated", f.label)
                })?;
                lil += l.per_copy.len();
            }
            let chain = success_chain(&f.inst, &f.tree).map_err(|e| format!("{}: {e}", f.label))?;
            ensure(chain.holds && chain.success_aprime >= chain.lower_bound, || {
                format!("{}: success chain fails", f.label)
            })?;
            Ok((simi, lil, 1))
        })
        .collect();
    let mut totals = (0, 0, 0);
    for r in results {
        let (a, b, c) = r?;
        totals = (totals.0 + a, totals.1 + b, totals.2 + c);
    }
    Ok(format!(
        "{} instances: {} snip-free leaf checks, {} per-copy snip bounds, {} chains, zero violations",
        fx.len(),
        totals.0,
        totals.1,
        totals.2
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let mut bases = vec![
        TruthTable::identity(),
        TruthTable::xor(2).unwrap(),
        TruthTable::and(2).unwrap(),
        TruthTable::majority(3).unwrap(),
    ];
    for m in 1..=4 {
        bases.push(random_nonconstant(&mut rng, m));
    }
    let mut checked = 0usize;
    for g in &bases {
        let m = g.arity();
        for t in 1..=12 / m {
            let s = xor_stack(g, t).map_err(|e| e.to_string())?;
            ensure(s.arity() == t * m, || format!("arity of stack t={t}"))?;
            for x in 0..1u64 << (t * m) {
                let direct = (0..t).fold(false, |acc, k| acc ^ g.get(x >> (k * m) & ((1 << m) - 1)));
                ensure(s.get(x) == direct, || format!("stack mismatch g={g:?} t={t} x={x}"))?;
            }
            checked += 1;
        }
    }
    let eps = ratio(7, 16);
    let depths: Vec<usize> = (1..=3)
        .map(|t| {
            let s = xor_stack(&TruthTable::identity(), t).unwrap();
            rand_complexity(&s, &eps, &ratio(1, 100), 200_000).map(|r| r.depth)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(depths.windows(2).all(|w| w[0] <= w[1]), || format!("depths {depths:?} not monotone"))?;
    Ok(format!("{checked} stacks match direct evaluation; depths for t=1..3: {depths:?}"))
}

fn criterion_10() -> Outcome {
    let eps = ratio(1, 3);
    let tol = ratio(1, 100);
    let uniform = |k: usize| vec![1u128; 1 << k];
    let id = TruthTable::identity();
    let xor2 = TruthTable::xor(2).unwrap();
    let and2 = TruthTable::and(2).unwrap();
    // R_ε(g) ≥ D^uniform_ε(g) and R_ε(g) ≤ arity, so equality pins the value
    let id_oracle = oracle::dist_complexity(&id, &uniform(1), &eps);
    let xor_oracle = oracle::dist_complexity(&xor2, &uniform(2), &eps);
    let and_oracle = oracle::dist_complexity(&and2, &uniform(2), &eps);
    ensure((id_oracle, xor_oracle, and_oracle) == (1, 2, 0), || {
        format!("oracle values {id_oracle}, {xor_oracle}, {and_oracle}")
    })?;
    let r_id = rand_complexity(&id, &eps, &tol, 200_000).map_err(|e| e.to_string())?.depth;
    let r_xor = rand_complexity(&xor2, &eps, &tol, 200_000).map_err(|e| e.to_string())?.depth;
    let d_and = dist_complexity(&and2, &Dist::uniform(2).unwrap(), &eps).map_err(|e| e.to_string())?;
    ensure(r_id == id_oracle && r_xor == xor_oracle && d_and == and_oracle, || {
        format!("library values {r_id}, {r_xor}, {d_and}")
    })?;
    Ok(format!("R(identity1) = {r_id}, R(XOR2) = {r_xor}, D^uniform(AND2) = {d_and}"))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    report(name, outcome, start)
}

fn report(name: &str, outcome: Outcome, start: Instant) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail} [{secs:.1}s]");
            true
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail} [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run("criterion 1 (unbias sweep)", criterion_1);
    ok &= run("criterion 2 (rbias sweep)", criterion_2);
    ok &= run("criterion 3 (fullbias sweep)", criterion_3);
    ok &= run("criterion 4 (dp vs tree enumeration)", criterion_4);
    ok &= run("criterion 5 (minimax consistency)", criterion_5);
    let start = Instant::now();
    let (six, seven) = catch_unwind(criterion_6_and_7).unwrap_or_else(|_| {
        let e = Err("panicked".to_string());
        (e.clone(), e)
    });
    ok &= report("criterion 6 (simulator exactness)", six, start);
    ok &= report("criterion 7 (z-query budget)", seven, start);
    ok &= run("criterion 8 (simileaf, lilsnip, success chain)", criterion_8);
    ok &= run("criterion 9 (xor stack)", criterion_9);
    ok &= run("criterion 10 (known values)", criterion_10);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
