//! Canonical enumeration of read-once tree shapes.

use super::{DecisionTree, TreeSpec};
use crate::error::{QcError, Result};

/// Refuse to materialize more trees than this.
pub const MAX_ENUMERATED_TREES: usize = 100_000;

/// Number of read-once trees of depth `<= max_depth` on `free` variables,
/// counting shapes and query variables (leaf labels ignored).
pub fn count_trees(free: usize, max_depth: usize) -> u128 {
    if free == 0 || max_depth == 0 {
        return 1;
    }
    let sub = count_trees(free - 1, max_depth - 1);
    1 + free as u128 * sub * sub
}

/// Every read-once tree on `arity` variables with depth at most `max_depth`,
/// with all leaves labeled 0. Order is canonical: the leaf first, then queries by
/// variable index, with children enumerated lexicographically.
pub fn enumerate_trees(arity: usize, max_depth: usize) -> Result<Vec<DecisionTree>> {
    let total = count_trees(arity, max_depth.min(arity));
    if total > MAX_ENUMERATED_TREES as u128 {
        return Err(QcError::CapExceeded {
            what: "enumerated tree count",
            value: usize::try_from(total).unwrap_or(usize::MAX),
            cap: MAX_ENUMERATED_TREES,
        });
    }
    shapes(arity, 0, max_depth.min(arity))
        .iter()
        .map(|spec| DecisionTree::new(arity, spec))
        .collect()
}

fn shapes(arity: usize, used: u64, budget: usize) -> Vec<TreeSpec> {
    let mut out = vec![TreeSpec::leaf(0)];
    if budget == 0 {
        return out;
    }
    for var in (0..arity).filter(|v| used >> v & 1 == 0) {
        let subs = shapes(arity, used | 1 << var, budget - 1);
        for zero in &subs {
            for one in &subs {
                out.push(TreeSpec::query(var, zero.clone(), one.clone()));
            }
        }
    }
    out
}
