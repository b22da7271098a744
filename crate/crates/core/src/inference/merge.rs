//! Block-merge phase.

use std::time::Instant;

use crate::blockmodel::Blockmodel;
use crate::error::{Error, Result};
use crate::rng::SbpRng;

use super::proposal::propose_merge;

/// Best merge found for one community.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeProposal {
    pub community: usize,
    pub target: usize,
    pub delta_dl: f64,
}

/// Draws `per_community` merge candidates for every community accepted by
/// `owned` and keeps the cheapest for each. All candidates are evaluated
/// against the model as given.
pub fn propose_merges(
    b: &Blockmodel,
    per_community: usize,
    owned: impl Fn(usize) -> bool,
    rng: &mut SbpRng,
) -> Vec<MergeProposal> {
    let mut out = Vec::new();
    for c in 0..b.num_slots() {
        if !owned(c) {
            continue;
        }
        let mut best: Option<MergeProposal> = None;
        for _ in 0..per_community {
            let Some(s) = propose_merge(b, c, rng) else { break };
            let d = b.merge_delta_unchecked(c, s).delta_dl;
            if best.is_none_or(|p| d < p.delta_dl) {
                best = Some(MergeProposal {
                    community: c,
                    target: s,
                    delta_dl: d,
                });
            }
        }
        out.extend(best);
    }
    out
}

/// Sorts proposals by `(delta_dl, community)`.
pub fn sort_proposals(proposals: &mut [MergeProposal]) {
    proposals.sort_by(|a, b| a.delta_dl.total_cmp(&b.delta_dl).then(a.community.cmp(&b.community)));
}

/// Applies proposals in ascending cost until `target` communities remain,
/// following merge chains so that a target already merged away is
/// replaced by the community it now belongs to. The model is renumbered
/// afterwards. Returns the number of merges applied.
pub fn apply_best_merges(b: &mut Blockmodel, mut proposals: Vec<MergeProposal>, target: usize) -> Result<usize> {
    sort_proposals(&mut proposals);
    let mut applied = 0;
    for p in proposals {
        if b.num_communities() <= target {
            break;
        }
        let from = b.resolve(p.community);
        let into = b.resolve(p.target);
        if from == into {
            continue;
        }
        b.apply_merge(from, into)?;
        applied += 1;
    }
    b.renumber();
    Ok(applied)
}

/// Summary of one merge phase.
#[derive(Clone, Debug, Default)]
pub struct MergeOutcome {
    pub merges: usize,
    pub seconds: f64,
}

/// Reduces a compact blockmodel towards `target` communities.
pub fn block_merge_phase(
    b: &mut Blockmodel,
    target: usize,
    per_community: usize,
    rng: &mut SbpRng,
) -> Result<MergeOutcome> {
    if target < 1 {
        return Err(Error::Config("merge target must be at least 1".into()));
    }
    let start = Instant::now();
    if target >= b.num_communities() {
        return Ok(MergeOutcome::default());
    }
    let proposals = propose_merges(b, per_community, |_| true, rng);
    let merges = apply_best_merges(b, proposals, target)?;
    Ok(MergeOutcome {
        merges,
        seconds: start.elapsed().as_secs_f64(),
    })
}
