//! Exact and sampled tools for query complexity of functions, relations and
//! their compositions: subcube distributions, decision trees, distributional
//! and randomized complexity, composed instances and the simulation checks.

pub mod bias;
pub mod caps;
pub mod complexity;
pub mod compose;
pub mod dist;
pub mod dtree;
pub mod error;
pub mod problem;
pub mod rational;
pub mod relation;
pub mod report;
pub mod scaled;
pub mod simulate;
pub mod split;
pub mod subcube;
pub mod sweep;
pub mod truth_table;

pub use bias::{bias, check_fullbias, FullbiasCheck};
pub use caps::Caps;
pub use complexity::{
    best_success, dist_complexity, hard_distribution, rand_complexity, DpResult, GameResult,
    HardDistribution,
};
pub use compose::{
    compose_relation, gamma, gamma_z, xor_stack, ComposedInstance, Gamma, InstanceParams,
    ProductDist, ZeroMassPolicy,
};
pub use dist::Dist;
pub use dtree::{parse_tree, BlockStructure, DecisionTree, Label, NodeId, TreeSpec};
pub use error::{QcError, Result};
pub use problem::QueryProblem;
pub use report::{Record, Value, Verdict};
pub use rational::{fmt_rational, parse_rational, ratio, Rational};
pub use relation::Relation;
pub use subcube::Subcube;
pub use truth_table::TruthTable;
