//! Deterministic decision trees over `{0,1}^k`.
//!
//! Trees are read-once along every root-to-leaf path, so the subcube of a node at
//! depth `d` has codimension exactly `d`.

mod enumerate;
mod text;

use std::fmt;

use num_traits::{One, Zero};

use crate::dist::Dist;
use crate::error::{QcError, Result};
use crate::rational::Rational;
use crate::subcube::{Subcube, MAX_SUBCUBE_ARITY};

pub use enumerate::{count_trees, enumerate_trees};
pub use text::parse_tree;

pub type Label = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// An unvalidated tree, as built by hand or parsed from text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeSpec {
    Query {
        /// 0-based variable index.
        var: usize,
        zero: Box<TreeSpec>,
        one: Box<TreeSpec>,
    },
    Leaf {
        label: Label,
        /// Explicit leaf id; unset ids are assigned in depth-first order.
        id: Option<usize>,
    },
}

impl TreeSpec {
    pub fn leaf(label: Label) -> Self {
        TreeSpec::Leaf { label, id: None }
    }

    pub fn query(var: usize, zero: TreeSpec, one: TreeSpec) -> Self {
        TreeSpec::Query {
            var,
            zero: Box::new(zero),
            one: Box::new(one),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    /// A variable is queried twice on one path.
    ReadOnce { var: usize },
    VarOutOfRange { var: usize, arity: usize },
    DuplicateLeafId(usize),
    LeafIdOutOfRange { id: usize, leaves: usize },
    ArityTooLarge(usize),
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::ReadOnce { var } => {
                write!(f, "variable {} queried twice on one path", var + 1)
            }
            TreeViolation::VarOutOfRange { var, arity } => {
                write!(f, "variable {} out of range for arity {arity}", var + 1)
            }
            TreeViolation::DuplicateLeafId(id) => write!(f, "duplicate leaf id {id}"),
            TreeViolation::LeafIdOutOfRange { id, leaves } => {
                write!(f, "leaf id {id} out of range for {leaves} leaves")
            }
            TreeViolation::ArityTooLarge(a) => write!(f, "arity {a} is too large"),
        }
    }
}

/// Checks read-once paths, variable ranges and leaf ids. Returns the first violation.
pub fn validate(arity: usize, spec: &TreeSpec) -> std::result::Result<(), TreeViolation> {
    fn walk(
        spec: &TreeSpec,
        arity: usize,
        used: u64,
        ids: &mut Vec<Option<usize>>,
    ) -> std::result::Result<(), TreeViolation> {
        match spec {
            TreeSpec::Leaf { id, .. } => {
                ids.push(*id);
                Ok(())
            }
            TreeSpec::Query { var, zero, one } => {
                if *var >= arity {
                    return Err(TreeViolation::VarOutOfRange { var: *var, arity });
                }
                if used >> var & 1 == 1 {
                    return Err(TreeViolation::ReadOnce { var: *var });
                }
                walk(zero, arity, used | 1 << var, ids)?;
                walk(one, arity, used | 1 << var, ids)
            }
        }
    }
    if arity > MAX_SUBCUBE_ARITY {
        return Err(TreeViolation::ArityTooLarge(arity));
    }
    let mut ids = Vec::new();
    walk(spec, arity, 0, &mut ids)?;
    let leaves = ids.len();
    let mut seen = vec![false; leaves];
    for id in ids.into_iter().flatten() {
        if id >= leaves {
            return Err(TreeViolation::LeafIdOutOfRange { id, leaves });
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(TreeViolation::DuplicateLeafId(id));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Query { var: usize, children: [NodeId; 2] },
    Leaf { label: Label, leaf_id: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    /// Parent and the outcome bit leading here.
    pub parent: Option<(NodeId, bool)>,
    pub depth: usize,
}

/// A validated decision tree stored as an arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    arity: usize,
    nodes: Vec<Node>,
    /// Node of each leaf, indexed by leaf id.
    leaves: Vec<NodeId>,
}

/// Outcome of running a tree on one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub label: Label,
    pub leaf_id: usize,
    pub queries: usize,
}

impl DecisionTree {
    pub fn new(arity: usize, spec: &TreeSpec) -> Result<Self> {
        validate(arity, spec).map_err(QcError::InvalidTree)?;
        let mut tree = DecisionTree {
            arity,
            nodes: Vec::new(),
            leaves: Vec::new(),
        };
        let mut dfs_leaves: Vec<(Option<usize>, NodeId)> = Vec::new();
        tree.insert(spec, None, 0, &mut dfs_leaves);
        let explicit = dfs_leaves.iter().any(|(id, _)| id.is_some());
        let mut slots: Vec<Option<NodeId>> = vec![None; dfs_leaves.len()];
        let mut pending = Vec::new();
        for (pos, (id, node)) in dfs_leaves.iter().enumerate() {
            match id {
                Some(id) => slots[*id] = Some(*node),
                None if !explicit => slots[pos] = Some(*node),
                None => pending.push(*node),
            }
        }
        // leaves without explicit ids take the free ids in depth-first order
        let mut pending = pending.into_iter();
        for slot in slots.iter_mut().filter(|s| s.is_none()) {
            *slot = pending.next();
        }
        tree.leaves = slots.into_iter().map(|s| s.expect("every id slot filled")).collect();
        for (leaf_id, node) in tree.leaves.clone().into_iter().enumerate() {
            if let NodeKind::Leaf { leaf_id: slot, .. } = &mut tree.nodes[node.0].kind {
                *slot = leaf_id;
            }
        }
        Ok(tree)
    }

    fn insert(
        &mut self,
        spec: &TreeSpec,
        parent: Option<(NodeId, bool)>,
        depth: usize,
        leaves: &mut Vec<(Option<usize>, NodeId)>,
    ) -> NodeId {
        let id = NodeId(self.nodes.len());
        match spec {
            TreeSpec::Leaf { label, id: leaf } => {
                self.nodes.push(Node {
                    kind: NodeKind::Leaf {
                        label: *label,
                        leaf_id: usize::MAX,
                    },
                    parent,
                    depth,
                });
                leaves.push((*leaf, id));
            }
            TreeSpec::Query { var, zero, one } => {
                self.nodes.push(Node {
                    kind: NodeKind::Query {
                        var: *var,
                        children: [NodeId(0); 2],
                    },
                    parent,
                    depth,
                });
                let c0 = self.insert(zero, Some((id, false)), depth + 1, leaves);
                let c1 = self.insert(one, Some((id, true)), depth + 1, leaves);
                self.nodes[id.0].kind = NodeKind::Query {
                    var: *var,
                    children: [c0, c1],
                };
            }
        }
        id
    }

    /// The zero-query tree.
    pub fn constant(arity: usize, label: Label) -> Result<Self> {
        DecisionTree::new(arity, &TreeSpec::leaf(label))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes
            .get(id.0)
            .ok_or_else(|| QcError::InvalidParameter(format!("unknown node {}", id.0)))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_node(&self, leaf_id: usize) -> Result<NodeId> {
        self.leaves
            .get(leaf_id)
            .copied()
            .ok_or_else(|| QcError::InvalidParameter(format!("unknown leaf id {leaf_id}")))
    }

    pub fn leaf_label(&self, leaf_id: usize) -> Result<Label> {
        match self.node(self.leaf_node(leaf_id)?)?.kind {
            NodeKind::Leaf { label, .. } => Ok(label),
            NodeKind::Query { .. } => unreachable!("leaf table points at a leaf"),
        }
    }

    /// Worst-case number of queries.
    pub fn depth(&self) -> usize {
        self.leaves
            .iter()
            .map(|l| self.nodes[l.0].depth)
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, x: u64) -> Result<Evaluation> {
        if self.arity < 64 && x >> self.arity != 0 {
            return Err(QcError::PointOutOfRange {
                point: x,
                arity: self.arity,
            });
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: u64) -> Evaluation {
        let mut cur = 0usize;
        loop {
            match &self.nodes[cur].kind {
                NodeKind::Leaf { label, leaf_id } => {
                    return Evaluation {
                        label: *label,
                        leaf_id: *leaf_id,
                        queries: self.nodes[cur].depth,
                    }
                }
                NodeKind::Query { var, children } => {
                    cur = children[(x >> var & 1) as usize].0;
                }
            }
        }
    }

    /// `(var, bit)` outcomes from the root down to `id`, in query order.
    pub fn path(&self, id: NodeId) -> Result<Vec<(usize, bool)>> {
        self.node(id)?;
        let mut out = Vec::new();
        let mut cur = id;
        while let Some((parent, bit)) = self.nodes[cur.0].parent {
            if let NodeKind::Query { var, .. } = self.nodes[parent.0].kind {
                out.push((var, bit));
            }
            cur = parent;
        }
        out.reverse();
        Ok(out)
    }

    /// `C_v`: inputs whose computation passes through `id`.
    pub fn path_subcube(&self, id: NodeId) -> Result<Subcube> {
        Subcube::from_assignment(self.arity, &self.path(id)?)
    }

    /// `C_v` split into one subcube per copy, `C_v^{(1)} × ... × C_v^{(n)}`.
    pub fn block_subcubes(&self, id: NodeId, blocks: &BlockStructure) -> Result<Vec<Subcube>> {
        blocks.check_arity(self.arity)?;
        let mut out = vec![Subcube::full(blocks.width); blocks.blocks];
        for (var, bit) in self.path(id)? {
            let (copy, j) = blocks.locate(var);
            out[copy] = out[copy].fix(j, bit)?;
        }
        Ok(out)
    }

    /// Leaf label mapping, keeping the shape.
    pub fn relabel(&self, f: impl Fn(usize) -> Label) -> DecisionTree {
        let mut out = self.clone();
        for node in &mut out.nodes {
            if let NodeKind::Leaf { label, leaf_id } = &mut node.kind {
                *label = f(*leaf_id);
            }
        }
        out
    }

    pub fn to_spec(&self) -> TreeSpec {
        fn build(t: &DecisionTree, id: NodeId) -> TreeSpec {
            match &t.nodes[id.0].kind {
                NodeKind::Leaf { label, .. } => TreeSpec::leaf(*label),
                NodeKind::Query { var, children } => {
                    TreeSpec::query(*var, build(t, children[0]), build(t, children[1]))
                }
            }
        }
        build(self, self.root())
    }

    /// `Pr[computation ends at ℓ]` for an input whose copies are drawn independently
    /// from `per_copy` (one distribution per block). Indexed by leaf id.
    pub fn reach_probs_product(
        &self,
        blocks: &BlockStructure,
        per_copy: &[Dist],
    ) -> Result<Vec<Rational>> {
        blocks.check_arity(self.arity)?;
        if per_copy.len() != blocks.blocks {
            return Err(QcError::ArityMismatch {
                expected: blocks.blocks,
                found: per_copy.len(),
            });
        }
        for d in per_copy {
            d.check_arity(blocks.width)?;
        }
        self.leaves
            .iter()
            .map(|&leaf| {
                let cubes = self.block_subcubes(leaf, blocks)?;
                let mut p = Rational::one();
                for (cube, dist) in cubes.iter().zip(per_copy) {
                    if p.is_zero() {
                        break;
                    }
                    p *= dist.subcube_prob(cube)?;
                }
                Ok(p)
            })
            .collect()
    }

    /// Leaf probabilities under a flat distribution, by evaluating every point.
    pub fn reach_probs_flat(&self, dist: &Dist) -> Result<Vec<Rational>> {
        dist.check_arity(self.arity)?;
        let mut out = vec![Rational::zero(); self.leaves.len()];
        for x in dist.support() {
            out[self.eval_unchecked(x).leaf_id] += dist.prob(x);
        }
        Ok(out)
    }
}

/// Decomposition of `n·m` flat variables into `n` copies of width `m`.
/// Flat variable `i·m + j` is variable `j` of copy `i` (both 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockStructure {
    pub blocks: usize,
    pub width: usize,
}

impl BlockStructure {
    pub fn new(blocks: usize, width: usize) -> Result<Self> {
        if blocks == 0 || width == 0 {
            return Err(QcError::InvalidParameter(
                "block structure needs n >= 1 and m >= 1".into(),
            ));
        }
        Ok(BlockStructure { blocks, width })
    }

    pub fn arity(&self) -> usize {
        self.blocks * self.width
    }

    #[inline]
    pub fn locate(&self, var: usize) -> (usize, usize) {
        (var / self.width, var % self.width)
    }

    #[inline]
    pub fn flat(&self, copy: usize, j: usize) -> usize {
        copy * self.width + j
    }

    /// Bits of copy `copy` extracted from a flat point.
    #[inline]
    pub fn extract(&self, x: u64, copy: usize) -> u64 {
        (x >> (copy * self.width)) & ((1u64 << self.width) - 1)
    }

    fn check_arity(&self, arity: usize) -> Result<()> {
        if self.arity() != arity {
            Err(QcError::ArityMismatch {
                expected: self.arity(),
                found: arity,
            })
        } else {
            Ok(())
        }
    }
}
