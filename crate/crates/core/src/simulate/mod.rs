//! The randomized simulation `A′` of a tree `B` for `f∘g^n` (sampled and exact),
//! snip labels, and exact verifiers for the bias and leaf-probability claims.

mod aprime;
mod checks;
mod claims;
mod leaves;

pub use crate::compose::ZeroMassPolicy;
pub use aprime::{derive_seed, exact_q, run_aprime, LeafCounts, SimulationTrace, Simulator};
pub use checks::{
    seed_search, success_chain, verify_lilsnip, verify_simileaf, LilsnipReport, SeedSearch,
    SimileafReport, SuccessChainReport,
};
pub use claims::{
    verify_rbias, verify_unbias, ClaimPart, RbiasContext, RbiasReport, UnbiasReport,
    UnbiasViolation,
};
pub use leaves::{leaf_reports, snip_labels, LeafReport};

pub(crate) use claims::{fullbias_holds, rbias_events, rbias_pass, rbias_worst, unbias_counts};
