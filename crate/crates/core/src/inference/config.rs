use crate::error::{Error, Result};

/// Tuning knobs for stochastic block partitioning.
#[derive(Clone, Debug, PartialEq)]
pub struct SbpConfig {
    /// Merge candidates drawn per community in a block-merge phase.
    pub merge_proposals_per_community: usize,
    /// Upper bound on sweeps in one MCMC phase.
    pub mcmc_max_sweeps: usize,
    /// Convergence threshold once the golden-ratio bracket is established.
    pub mcmc_threshold: f64,
    /// Convergence threshold while the community count is still being halved.
    pub mcmc_threshold_initial: f64,
    /// Inverse temperature of the Metropolis-Hastings acceptance rule.
    pub beta: f64,
    /// Fraction of communities kept by each merge phase before the bracket exists.
    pub community_reduction_rate: f64,
    /// Share of vertices, by descending degree, swept sequentially by the
    /// hybrid sweep.
    pub hybrid_high_degree_fraction: f64,
    /// Worker threads for the low-degree part of the hybrid sweep.
    pub workers: usize,
    /// Partial results are combined pairwise until at most this many remain.
    pub dcsbp_combine_threshold: usize,
    /// Compare blockmodel checksums across ranks at every sync point.
    pub verify_replicas: bool,
    pub seed: u64,
}

impl Default for SbpConfig {
    fn default() -> Self {
        SbpConfig {
            merge_proposals_per_community: 10,
            mcmc_max_sweeps: 100,
            mcmc_threshold: 1e-4,
            mcmc_threshold_initial: 1e-3,
            beta: 3.0,
            community_reduction_rate: 0.5,
            hybrid_high_degree_fraction: 0.07,
            workers: 1,
            dcsbp_combine_threshold: 4,
            verify_replicas: cfg!(debug_assertions),
            seed: 0,
        }
    }
}

impl SbpConfig {
    pub fn with_seed(seed: u64) -> Self {
        SbpConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.merge_proposals_per_community < 1 {
            return bad("merge_proposals_per_community must be at least 1");
        }
        for t in [self.mcmc_threshold, self.mcmc_threshold_initial] {
            if !(t > 0.0 && t <= 1.0) {
                return bad("MCMC thresholds must lie in (0, 1]");
            }
        }
        if !(self.community_reduction_rate > 0.0 && self.community_reduction_rate < 1.0) {
            return bad("community_reduction_rate must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.hybrid_high_degree_fraction) {
            return bad("hybrid_high_degree_fraction must lie in [0, 1]");
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad("beta must be positive and finite");
        }
        if self.workers < 1 {
            return bad("workers must be at least 1");
        }
        if self.dcsbp_combine_threshold < 1 {
            return bad("dcsbp_combine_threshold must be at least 1");
        }
        Ok(())
    }
}
