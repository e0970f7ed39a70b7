//! Exhaustive and sampled claim sweeps over functions, grid distributions and
//! trees. Work is split across threads; results are merged in fixture order.

use num_integer::Integer;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::complexity::LeafValues;
use crate::dtree::{count_trees, enumerate_trees};
use crate::error::Result;
use crate::rational::{fmt_rational, Rational};
use crate::relation::bitstring;
use crate::simulate::{fullbias_holds, rbias_events, rbias_pass, rbias_worst, unbias_counts};
use crate::split::SplitTable;
use crate::truth_table::TruthTable;

/// Every way of writing `total` as an ordered sum of `parts` nonnegative integers.
pub fn compositions(parts: usize, total: u64) -> Vec<Vec<u64>> {
    fn go(parts: usize, total: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            go(parts - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(parts, total, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn primitive(w: &[u64]) -> bool {
    w.iter().fold(0u64, |g, &x| g.gcd(&x)) == 1
}

/// All distributions on `{0,1}^arity` whose probabilities are multiples of `1/D`
/// for some `D ≤ max_denom`, each listed once, as integer weights in lowest terms.
pub fn grid_weights(arity: usize, max_denom: u64) -> Vec<Vec<u64>> {
    (1..=max_denom)
        .flat_map(|d| compositions(1 << arity, d))
        .filter(|w| primitive(w))
        .collect()
}

/// `count` grid distributions drawn with replacement: a denominator uniform in
/// `1..=max_denom`, then a uniform composition (stars and bars).
pub fn sample_grid_weights(arity: usize, max_denom: u64, count: usize, seed: u64) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = 1usize << arity;
    (0..count)
        .map(|_| loop {
            let d = rng.random_range(1..=max_denom);
            // choose parts−1 bar positions among d + parts − 1 slots
            let slots = d as usize + parts - 1;
            let mut bars = rand::seq::index::sample(&mut rng, slots, parts - 1).into_vec();
            bars.sort_unstable();
            let mut w = Vec::with_capacity(parts);
            let mut prev = 0usize;
            for (k, &b) in bars.iter().enumerate() {
                w.push((b - prev - if k == 0 { 0 } else { 1 }) as u64);
                prev = b;
            }
            let last_start = if bars.is_empty() { 0 } else { prev + 1 };
            w.push((slots - last_start) as u64);
            if primitive(&w) {
                break w;
            }
        })
        .collect()
}

/// Every Boolean function on `arity ≤ 4` bits, by truth-table code.
pub fn all_functions(arity: usize) -> Vec<TruthTable> {
    assert!(arity <= 4, "2^(2^arity) functions");
    (0..1u64 << (1 << arity))
        .map(|code| TruthTable::from_code(arity, code).expect("code in range"))
        .collect()
}

/// `count` functions with independent uniform truth tables.
pub fn random_functions(arity: usize, count: usize, seed: u64) -> Result<Vec<TruthTable>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let outputs = (0..1u64 << arity).map(|_| rng.random::<bool>()).collect();
            TruthTable::new(arity, outputs)
        })
        .collect()
}

fn table_of(g: &TruthTable, w: &[u64]) -> SplitTable<i128> {
    let weights: Vec<i128> = w.iter().map(|&x| x as i128).collect();
    SplitTable::from_weights(g, &weights, weights.iter().sum())
}

fn small_parts(r: &Rational) -> (i128, i128) {
    let conv = |v: &num_bigint::BigInt| -> i128 {
        i128::try_from(v).ok().filter(|x| x.unsigned_abs() < 1 << 40).expect("sweep parameters have small parts")
    };
    (conv(r.numer()), conv(r.denom()))
}

/// `D^μ_ε(g)` for integer weights with `ε = en/ed`.
fn complexity_of(g: &TruthTable, w: &[u64], en: i128, ed: i128) -> usize {
    let masks: Vec<u64> = g.outputs().iter().map(|&b| 1u64 << b as u8).collect();
    let weights: Vec<u128> = w.iter().map(|&x| x as u128).collect();
    let denom: u128 = weights.iter().sum();
    let leaves = LeafValues::new(g.arity(), 2, &masks, &weights);
    let (en, ed) = (en as u128, ed as u128);
    (0..=g.arity())
        .find(|&d| *leaves.solve(d).value() * ed >= (ed - en) * denom)
        .unwrap_or(g.arity())
}

fn fixture_key(g: &TruthTable, w: &[u64]) -> String {
    let bits: String = g.outputs().iter().map(|&b| if b { '1' } else { '0' }).collect();
    let ws: Vec<String> = w.iter().map(u64::to_string).collect();
    format!("g={bits} mu=[{}]", ws.join(","))
}

/// Outcome of one sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub claim: String,
    /// `(g, μ, parameter)` combinations considered.
    pub fixtures: u64,
    /// Combinations whose hypotheses failed and were skipped.
    pub skipped: u64,
    /// Individual inequalities (or tree-level checks) evaluated.
    pub checks: u64,
    /// Descriptions of violations, in fixture order.
    pub violations: Vec<String>,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(mut self, other: SweepSummary) -> SweepSummary {
        self.fixtures += other.fixtures;
        self.skipped += other.skipped;
        self.checks += other.checks;
        self.violations.extend(other.violations);
        self
    }
}

fn run_sweep<F>(claim: &str, functions: &[TruthTable], weights: &[Vec<u64>], each: F) -> SweepSummary
where
    F: Fn(&TruthTable, &[u64], &mut SweepSummary) + Sync,
{
    let empty = || SweepSummary {
        claim: claim.to_string(),
        fixtures: 0,
        skipped: 0,
        checks: 0,
        violations: Vec::new(),
    };
    let pairs: Vec<(usize, usize)> = functions
        .iter()
        .enumerate()
        .filter(|(_, g)| weights.first().is_none_or(|w| w.len() == 1 << g.arity()))
        .flat_map(|(i, _)| (0..weights.len()).map(move |j| (i, j)))
        .collect();
    // indexed collection keeps the merge order independent of scheduling
    let parts: Vec<SweepSummary> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut s = empty();
            each(&functions[i], &weights[j], &mut s);
            s
        })
        .collect();
    parts.into_iter().fold(empty(), SweepSummary::merge)
}

/// Unbias claim on every subcube, for every `(g, μ, δ)`.
pub fn unbias_sweep(functions: &[TruthTable], weights: &[Vec<u64>], deltas: &[Rational]) -> SweepSummary {
    let ds: Vec<(i128, i128)> = deltas.iter().map(small_parts).collect();
    run_sweep("unbias", functions, weights, |g, w, s| {
        let t = table_of(g, w);
        for (k, (dn, dd)) in ds.iter().enumerate() {
            s.fixtures += 1;
            match unbias_counts(&t, dn, dd) {
                None => s.skipped += 1,
                Some((checked, bad)) => {
                    s.checks += 4 * checked as u64;
                    if bad > 0 {
                        s.violations.push(format!(
                            "{} delta={}: {bad} violated inequalities",
                            fixture_key(g, w),
                            fmt_rational(&deltas[k])
                        ));
                    }
                }
            }
        }
    })
}

/// Full-cube proposition for every `(g, μ, ε)` with `D^μ_ε(g) > 0`.
pub fn fullbias_sweep(functions: &[TruthTable], weights: &[Vec<u64>], epsilons: &[Rational]) -> SweepSummary {
    let es: Vec<(i128, i128)> = epsilons.iter().map(small_parts).collect();
    run_sweep("fullbias", functions, weights, |g, w, s| {
        let t = table_of(g, w);
        for (k, (en, ed)) in es.iter().enumerate() {
            s.fixtures += 1;
            let c = complexity_of(g, w, *en, *ed);
            if c == 0 {
                s.skipped += 1;
                continue;
            }
            s.checks += 2;
            if !fullbias_holds(&t, c, en, ed) {
                s.violations.push(format!(
                    "{} eps={}: D={c} but the mass/bias bound fails",
                    fixture_key(g, w),
                    fmt_rational(&epsilons[k])
                ));
            }
        }
    })
}

/// R->bias claim, parts (a) and (b), over every read-once tree of depth at most
/// `depth`, for every `(g, μ, ε)` with `D^μ_ε(g) > 0`.
///
/// Each part's largest event mass over all such trees is found by a subcube
/// recursion; trees are enumerated one by one only when that maximum fails.
pub fn rbias_sweep(
    functions: &[TruthTable],
    weights: &[Vec<u64>],
    epsilons: &[Rational],
    depth: usize,
) -> SweepSummary {
    let es: Vec<(i128, i128)> = epsilons.iter().map(small_parts).collect();
    run_sweep("rbias", functions, weights, |g, w, s| {
        let t = table_of(g, w);
        let trees_covered = count_trees(g.arity(), depth.min(g.arity())) as u64;
        for (k, (en, ed)) in es.iter().enumerate() {
            s.fixtures += 1;
            let c = complexity_of(g, w, *en, *ed);
            if c == 0 {
                s.skipped += 1;
                continue;
            }
            // δ = 1/2 − ε
            let (dn, dd) = (ed - 2 * en, 2 * ed);
            let events = rbias_events(&t, c, &dn, &dd);
            let worst = rbias_worst(&t, &events, depth);
            let (a, b) = rbias_pass(&t, &worst, &dn, &dd);
            s.checks += 3 * trees_covered;
            if a && b.iter().all(|&x| x) {
                continue;
            }
            let trees = match enumerate_trees(g.arity(), depth) {
                Ok(trees) => trees,
                Err(e) => {
                    s.violations.push(format!("{}: worst tree fails; {e}", fixture_key(g, w)));
                    continue;
                }
            };
            for tree in trees {
                let leaves = (0..tree.num_leaves()).map(|l| {
                    tree.path_subcube(tree.leaf_node(l).expect("leaf")).expect("leaf").ternary_index()
                });
                let mut sums = (0i128, [0i128; 2]);
                for idx in leaves.filter(|&i| events[i]) {
                    sums.0 += t.mass(idx);
                    sums.1[0] += *t.part(idx, false);
                    sums.1[1] += *t.part(idx, true);
                }
                let (a, b) = rbias_pass(&t, &sums, &dn, &dd);
                if !(a && b.iter().all(|&x| x)) {
                    s.violations.push(format!(
                        "{} eps={} tree={tree}",
                        fixture_key(g, w),
                        fmt_rational(&epsilons[k])
                    ));
                }
            }
        }
    })
}

/// Human-readable `μ` for reports.
pub fn describe_weights(w: &[u64]) -> String {
    let arity = w.len().trailing_zeros() as usize;
    let total: u64 = w.iter().sum();
    w.iter()
        .enumerate()
        .filter(|(_, &x)| x > 0)
        .map(|(x, &v)| format!("{}:{}/{}", bitstring(x as u64, arity), v, total))
        .collect::<Vec<_>>()
        .join(" ")
}
