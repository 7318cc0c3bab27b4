//! Identification of actual (Halpern-Pearl) causes in discrete structural
//! causal models by beam search, iterative sub-instance search and
//! bandit-based evaluation of stochastic oracles.

pub mod benchmarks;
pub mod error;
pub mod exact;
pub mod harness;
pub mod heuristic;
pub mod intervention;
pub mod metrics;
pub mod oracle;
pub mod report;
pub mod scm;
pub mod search;
pub mod stochastic;

pub use error::{Error, Result};
pub use heuristic::{Heuristic, HeuristicKind};
pub use intervention::{Intervention, VarSet};
pub use oracle::{FnOracle, NoisyScmOracle, Oracle, PinnedOracle, ScmOracle};
pub use scm::{Context, Domain, Scm, Value, VarId};
pub use search::{
    identify_causes, identify_causes_isi, minimize_causes, BeamConfig, CauseResult, SearchSpace,
    SearchStats, StochasticMode,
};

/// Mixes two words into a well-spread seed (splitmix64 finalizer).
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
