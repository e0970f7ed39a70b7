//! Distributional query complexity by exact dynamic programming over subcubes,
//! and randomized query complexity through the minimax game.

mod dp;
mod game;

pub use dp::{best_success, dist_complexity, dist_complexity_witness, DistComplexity, DpResult};
pub use game::{
    hard_distribution, rand_complexity, BracketOutcome, DepthBracket, GameResult, HardDistribution,
    QUANTUM_BITS,
};

#[allow(unused_imports)]
pub(crate) use dp::{LeafValues, Solved};
