use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compose::{ComposedInstance, ZeroMassPolicy};
use crate::dtree::{DecisionTree, Label, NodeId, NodeKind};
use crate::error::{QcError, Result};
use crate::rational::Rational;
use crate::relation::bitstring;
use crate::subcube::Subcube;

/// One run of `A′` on `z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationTrace {
    pub z: u64,
    pub leaf: usize,
    pub output: Label,
    /// Copies whose `z_i` was queried, in query order.
    pub z_queries: Vec<usize>,
    /// Number of copy-`i` queries on the path taken.
    pub per_copy_codims: Vec<usize>,
    pub rng_seed: u64,
}

/// Probability of taking the 0-child.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Zero,
    One,
    /// Take the 0-child iff a uniform 128-bit draw is below this value.
    Threshold(u128),
    /// Conditioning event of probability zero.
    Stuck,
}

#[derive(Debug, Clone, Copy)]
struct Step {
    copy: usize,
    queries_z: bool,
    branch: Branch,
}

fn branch_of(p0: &Rational) -> Branch {
    if p0.is_zero() {
        Branch::One
    } else if p0.is_one() {
        Branch::Zero
    } else {
        let scaled: BigInt = (p0 * Rational::from_integer(BigInt::one() << 128u32)).floor().to_integer();
        Branch::Threshold(scaled.to_u128().expect("p0 < 1"))
    }
}

/// `A′` on a fixed `z` with every branch probability precomputed.
///
/// At the `k`-th query into copy `i` the current copy subcube `C` is split on the
/// queried bit. For `k < c` the child is drawn from `Pr_μ[· | C]`; at `k = c`
/// the bit `z_i` is queried first; from then on children are drawn from
/// `Pr_{μ_{z_i}}[· | C]`.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    inst: &'a ComposedInstance,
    tree: &'a DecisionTree,
    z: u64,
    steps: Vec<Option<Step>>,
}

impl<'a> Simulator<'a> {
    pub fn new(inst: &'a ComposedInstance, tree: &'a DecisionTree, z: u64) -> Result<Self> {
        check_inputs(inst, tree, z)?;
        let blocks = inst.blocks();
        let split = inst.split();
        let c = inst.inner_complexity();
        let mut steps = vec![None; tree.num_nodes()];
        let mut stack = vec![(tree.root(), vec![Subcube::full(blocks.width); blocks.blocks])];
        while let Some((id, parts)) = stack.pop() {
            let NodeKind::Query { var, children } = tree.node(id)?.kind else {
                continue;
            };
            let (i, j) = blocks.locate(var);
            let cube = parts[i];
            let k = cube.codim() + 1;
            let c0 = cube.fix(j, false)?;
            let mu_branch = || {
                let mass = split.mass(&cube);
                if mass.is_zero() {
                    Branch::Stuck
                } else {
                    branch_of(&(split.mass(&c0) / mass))
                }
            };
            let branch = if k < c {
                mu_branch()
            } else {
                let b = z >> i & 1 == 1;
                let mass = split.part(&cube, b);
                if !mass.is_zero() {
                    branch_of(&(split.part(&c0, b) / mass))
                } else if inst.policy() == ZeroMassPolicy::FallbackToMu {
                    mu_branch()
                } else {
                    Branch::Stuck
                }
            };
            steps[id.0] = Some(Step {
                copy: i,
                queries_z: k == c,
                branch,
            });
            for (bit, child) in children.iter().enumerate() {
                let mut next = parts.clone();
                next[i] = cube.fix(j, bit == 1)?;
                stack.push((*child, next));
            }
        }
        Ok(Simulator {
            inst,
            tree,
            z,
            steps,
        })
    }

    pub fn z(&self) -> u64 {
        self.z
    }

    /// Runs `A′` with randomness from `ChaCha8Rng::seed_from_u64(seed)`.
    pub fn run(&self, seed: u64) -> Result<SimulationTrace> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.inst.n();
        let mut z_queries = Vec::new();
        let mut codims = vec![0usize; n];
        let mut cur = self.tree.root();
        loop {
            match self.tree.node(cur)?.kind {
                NodeKind::Leaf { label, leaf_id } => {
                    return Ok(SimulationTrace {
                        z: self.z,
                        leaf: leaf_id,
                        output: label,
                        z_queries,
                        per_copy_codims: codims,
                        rng_seed: seed,
                    })
                }
                NodeKind::Query { children, .. } => {
                    let step = self.steps[cur.0].expect("query nodes carry a step");
                    if step.queries_z {
                        z_queries.push(step.copy);
                    }
                    codims[step.copy] += 1;
                    let bit = match step.branch {
                        Branch::Zero => 0,
                        Branch::One => 1,
                        Branch::Threshold(t) => (rng.random::<u128>() >= t) as usize,
                        Branch::Stuck => return Err(stuck(self.z, cur, step.copy, n)),
                    };
                    cur = children[bit];
                }
            }
        }
    }

    /// Leaf counts over `samples` runs with seeds `derive_seed(root_seed, i)`.
    /// The result does not depend on how the work is scheduled.
    pub fn leaf_counts(&self, root_seed: u64, samples: u64) -> Result<LeafCounts> {
        let leaves = self.tree.num_leaves();
        let empty = || LeafCounts {
            counts: vec![0; leaves],
            samples: 0,
            max_z_queries: 0,
            total_z_queries: 0,
        };
        (0..samples)
            .into_par_iter()
            .try_fold(empty, |mut acc, i| {
                let t = self.run(derive_seed(root_seed, i))?;
                acc.counts[t.leaf] += 1;
                acc.samples += 1;
                acc.max_z_queries = acc.max_z_queries.max(t.z_queries.len());
                acc.total_z_queries += t.z_queries.len() as u64;
                Ok(acc)
            })
            .try_reduce(empty, |mut a, b| {
                for (x, y) in a.counts.iter_mut().zip(&b.counts) {
                    *x += y;
                }
                a.samples += b.samples;
                a.max_z_queries = a.max_z_queries.max(b.max_z_queries);
                a.total_z_queries += b.total_z_queries;
                Ok(a)
            })
    }
}

/// Aggregated Monte-Carlo leaf frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafCounts {
    pub counts: Vec<u64>,
    pub samples: u64,
    pub max_z_queries: usize,
    pub total_z_queries: u64,
}

fn stuck(z: u64, node: NodeId, copy: usize, n: usize) -> QcError {
    QcError::ZeroConditioningMass(format!(
        "A' on z = {} conditions copy {} on a null event at node {}",
        bitstring(z, n),
        copy + 1,
        node.0
    ))
}

pub(crate) fn check_inputs(inst: &ComposedInstance, tree: &DecisionTree, z: u64) -> Result<()> {
    if tree.arity() != inst.blocks().arity() {
        return Err(QcError::ArityMismatch {
            expected: inst.blocks().arity(),
            found: tree.arity(),
        });
    }
    if z >> inst.n() != 0 {
        return Err(QcError::PointOutOfRange {
            point: z,
            arity: inst.n(),
        });
    }
    Ok(())
}

/// `run_aprime(inst, B, z, seed)`: one deterministic run.
pub fn run_aprime(
    inst: &ComposedInstance,
    tree: &DecisionTree,
    z: u64,
    seed: u64,
) -> Result<SimulationTrace> {
    Simulator::new(inst, tree, z)?.run(seed)
}

/// Seed of sample `index` under root seed `root` (SplitMix64 finalizer).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut x = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Ordered outcomes `(copy variable, bit)` of one copy along one root-leaf path.
pub(crate) type CopyPath = Vec<(usize, bool)>;

/// Per-leaf, per-copy ordered outcomes.
pub(crate) fn copy_paths(inst: &ComposedInstance, tree: &DecisionTree) -> Result<Vec<Vec<CopyPath>>> {
    let blocks = inst.blocks();
    (0..tree.num_leaves())
        .map(|leaf| {
            let mut per_copy = vec![Vec::new(); blocks.blocks];
            for (var, bit) in tree.path(tree.leaf_node(leaf)?)? {
                let (i, j) = blocks.locate(var);
                per_copy[i].push((j, bit));
            }
            Ok(per_copy)
        })
        .collect()
}

pub(crate) fn prefix_cube(width: usize, outcomes: &[(usize, bool)]) -> Subcube {
    Subcube::from_assignment(width, outcomes).expect("read-once paths")
}

enum Factor {
    Value(Rational),
    /// `Pr_{μ_{z_i}}[C'] = 0` while `Pr_μ[C'] > 0`.
    NullCondition,
}

fn copy_factor(inst: &ComposedInstance, outcomes: &[(usize, bool)], b: bool) -> Factor {
    let split = inst.split();
    let c = inst.inner_complexity();
    let d = outcomes.len();
    let head = prefix_cube(inst.m(), &outcomes[..d.min(c - 1)]);
    let head_mass = split.mass(&head);
    if head_mass.is_zero() || d < c {
        return Factor::Value(head_mass);
    }
    let denom = split.part(&head, b);
    if denom.is_zero() {
        return Factor::NullCondition;
    }
    let leaf = prefix_cube(inst.m(), outcomes);
    Factor::Value(head_mass * split.part(&leaf, b) / denom)
}

/// `q_ℓ^z` for one leaf given its per-copy outcomes.
pub(crate) fn leaf_q(inst: &ComposedInstance, per_copy: &[Vec<(usize, bool)>], z: u64) -> Result<Rational> {
    let mut q = Rational::one();
    let mut null = None;
    for (i, outcomes) in per_copy.iter().enumerate() {
        match copy_factor(inst, outcomes, z >> i & 1 == 1) {
            Factor::Value(v) if v.is_zero() => return Ok(v),
            Factor::Value(v) => q *= v,
            Factor::NullCondition => match inst.policy() {
                ZeroMassPolicy::FallbackToMu => {
                    q *= inst.split().mass(&prefix_cube(inst.m(), outcomes))
                }
                ZeroMassPolicy::Strict => null = Some(i),
            },
        }
    }
    match null {
        Some(i) => Err(QcError::ZeroConditioningMass(format!(
            "A' on z = {} conditions copy {} on a null event",
            bitstring(z, inst.n()),
            i + 1
        ))),
        None => Ok(q),
    }
}

/// Exact leaf distribution of `A′` on `z`, indexed by leaf id:
/// `q_ℓ^z = ∏_i Pr_μ[C'_i] · Pr_{μ_{z_i}}[C_ℓ^{(i)} | C'_i]`, where `C'_i` fixes the
/// first `min(d_i, c−1)` copy-`i` outcomes and the second factor is 1 when `d_i < c`.
pub fn exact_q(inst: &ComposedInstance, tree: &DecisionTree, z: u64) -> Result<Vec<Rational>> {
    check_inputs(inst, tree, z)?;
    copy_paths(inst, tree)?
        .iter()
        .map(|per_copy| leaf_q(inst, per_copy, z))
        .collect()
}
