use crate::compose::ComposedInstance;
use crate::dtree::{DecisionTree, Label, NodeKind};
use crate::error::Result;
use crate::rational::Rational;
use crate::subcube::Subcube;

use super::aprime::{check_inputs, copy_paths, leaf_q, prefix_cube};

/// Everything known about one leaf of `B` for a fixed `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafReport {
    pub leaf_id: usize,
    pub label: Label,
    /// `p_ℓ^z`: probability that `B` on `x ~ γ^z` ends here.
    pub p: Rational,
    /// `q_ℓ^z`: probability that `A′` on `z` ends here.
    pub q: Rational,
    pub snip_flags: Vec<bool>,
    pub snip: bool,
    /// Per path node (root first, leaf last), per copy: `bias^μ(C_t^{(i)})`,
    /// `None` where the copy subcube has zero `μ`-mass.
    pub bias_trace: Vec<Vec<Option<Rational>>>,
    /// Number of `z` bits `A′` queries on the way here.
    pub z_queries: usize,
}

/// `snip^{(i)}(ℓ)` for one leaf: some copy-`i` subcube on the path has codim `< c`
/// and bias `≥ θ`. Zero-mass subcubes have no bias and never snip.
pub(crate) fn leaf_snips(
    inst: &ComposedInstance,
    per_copy: &[Vec<(usize, bool)>],
    theta: &Rational,
) -> Vec<bool> {
    let c = inst.inner_complexity();
    per_copy
        .iter()
        .map(|outcomes| {
            (0..=outcomes.len().min(c - 1)).any(|k| {
                let cube = prefix_cube(inst.m(), &outcomes[..k]);
                inst.split().bias(&cube).is_some_and(|b| b >= *theta)
            })
        })
        .collect()
}

/// `p_ℓ^z = ∏_i Pr_{μ_{z_i}}[C_ℓ^{(i)}]`.
pub(crate) fn leaf_p(inst: &ComposedInstance, per_copy: &[Vec<(usize, bool)>], z: u64) -> Rational {
    let mut p = Rational::from_integer(1.into());
    for (i, outcomes) in per_copy.iter().enumerate() {
        let b = z >> i & 1 == 1;
        p *= inst
            .split()
            .restricted(&prefix_cube(inst.m(), outcomes), b)
            .expect("instances have both restrictions");
    }
    p
}

/// Number of copies queried at least `c` times.
pub(crate) fn leaf_z_queries(inst: &ComposedInstance, per_copy: &[Vec<(usize, bool)>]) -> usize {
    per_copy
        .iter()
        .filter(|o| o.len() >= inst.inner_complexity())
        .count()
}

/// Snip flags of every leaf (by leaf id), one flag per copy.
pub fn snip_labels(
    inst: &ComposedInstance,
    tree: &DecisionTree,
    theta: &Rational,
) -> Result<Vec<Vec<bool>>> {
    check_inputs(inst, tree, 0)?;
    Ok(copy_paths(inst, tree)?
        .iter()
        .map(|per_copy| leaf_snips(inst, per_copy, theta))
        .collect())
}

fn bias_trace(inst: &ComposedInstance, tree: &DecisionTree, leaf: usize) -> Result<Vec<Vec<Option<Rational>>>> {
    let blocks = inst.blocks();
    let mut parts = vec![Subcube::full(blocks.width); blocks.blocks];
    let row = |parts: &[Subcube]| parts.iter().map(|c| inst.split().bias(c)).collect::<Vec<_>>();
    let mut out = vec![row(&parts)];
    let mut cur = tree.root();
    let path = tree.path(tree.leaf_node(leaf)?)?;
    for (var, bit) in path {
        let (i, j) = blocks.locate(var);
        parts[i] = parts[i].fix(j, bit)?;
        out.push(row(&parts));
        if let NodeKind::Query { children, .. } = tree.node(cur)?.kind {
            cur = children[bit as usize];
        }
    }
    Ok(out)
}

/// Full per-leaf report for `z`, with snip threshold `inst.theta()`.
pub fn leaf_reports(inst: &ComposedInstance, tree: &DecisionTree, z: u64) -> Result<Vec<LeafReport>> {
    check_inputs(inst, tree, z)?;
    copy_paths(inst, tree)?
        .iter()
        .enumerate()
        .map(|(leaf_id, per_copy)| {
            let snip_flags = leaf_snips(inst, per_copy, inst.theta());
            Ok(LeafReport {
                leaf_id,
                label: tree.leaf_label(leaf_id)?,
                p: leaf_p(inst, per_copy, z),
                q: leaf_q(inst, per_copy, z)?,
                snip: snip_flags.iter().any(|&s| s),
                snip_flags,
                bias_trace: bias_trace(inst, tree, leaf_id)?,
                z_queries: leaf_z_queries(inst, per_copy),
            })
        })
        .collect()
}
