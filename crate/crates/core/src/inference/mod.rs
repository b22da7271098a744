//! Serial stochastic block partitioning: proposals, the two phase kinds,
//! and the golden-ratio search over the number of communities.

mod config;
mod driver;
mod golden;
mod mcmc;
mod merge;
pub mod proposal;

pub use config::SbpConfig;
pub use driver::{
    sbp, sbp_from, sbp_with_rank, search, PhaseExecutor, PhaseKind, SbpResult, SerialExecutor, TraceRecord,
};
pub use golden::{GoldenBracket, Slot, Snapshot, Step};
pub use mcmc::{
    hybrid_sweep, mcmc_phase, split_by_degree, sweep_vertices, ConvergenceMonitor, McmcOutcome, PhaseStreams,
    SweepPlan, SweepScratch,
};
pub use merge::{apply_best_merges, block_merge_phase, propose_merges, sort_proposals, MergeOutcome, MergeProposal};
pub use proposal::{accept_move, move_probability, propose_merge, propose_move, reverse_move_probability};
