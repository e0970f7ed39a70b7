//! Fixtures shared by the benchmarks.

use qclab_core::{ComposedInstance, DecisionTree, Dist, InstanceParams, Relation, TruthTable, ZeroMassPolicy};

/// A fixed pseudo-random function of the given arity (xorshift over the index).
pub fn scrambled_function(arity: usize) -> TruthTable {
    TruthTable::from_fn(arity, |x| {
        let mut v = x.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
        v ^= v >> 29;
        v = v.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        (v >> 32) & 1 == 1
    })
    .expect("arity within caps")
}

/// Weights `1..=7` in a fixed pattern.
pub fn skewed_dist(arity: usize) -> Dist {
    let w: Vec<u64> = (0..1u64 << arity).map(|x| 1 + (x * 5 + 3) % 7).collect();
    Dist::from_weights(arity, &w).expect("positive weights")
}

/// `XOR_n ∘ MAJ_3^n` under a uniform `μ` with `ε = 1/4`.
pub fn maj_instance(n: usize) -> ComposedInstance {
    ComposedInstance::new(
        Relation::from_function(&TruthTable::xor(n).expect("n ≥ 1")),
        TruthTable::majority(3).expect("arity 3"),
        Dist::uniform(3).expect("arity 3"),
        Dist::uniform(n).expect("n ≥ 1"),
        InstanceParams {
            epsilon: Some(qclab_core::ratio(1, 4)),
            theta: Some(qclab_core::ratio(1, 2)),
            policy: ZeroMassPolicy::FallbackToMu,
        },
    )
    .expect("MAJ3 has positive complexity at 1/4")
}

/// The tree that reads every variable in order and outputs the composed value.
pub fn full_tree(inst: &ComposedInstance) -> DecisionTree {
    let arity = inst.blocks().arity();
    let h = inst.composed_relation().expect("within caps");
    let spec = build(&h, arity, 0, 0);
    DecisionTree::new(arity, &spec).expect("read-once by construction")
}

fn build(h: &Relation, arity: usize, var: usize, x: u64) -> qclab_core::TreeSpec {
    use qclab_core::QueryProblem;
    if var == arity {
        return qclab_core::TreeSpec::leaf(h.accepted_mask(x).trailing_zeros() as usize);
    }
    qclab_core::TreeSpec::query(var, build(h, arity, var + 1, x), build(h, arity, var + 1, x | 1 << var))
}
