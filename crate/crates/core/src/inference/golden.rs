//! Golden-ratio search over the number of communities.

use crate::blockmodel::Blockmodel;

const GOLDEN: f64 = 0.618;

/// A partition kept by the search, with its community count and description length.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub num_communities: usize,
    pub description_length: f64,
    pub blockmodel: Blockmodel,
}

impl Snapshot {
    pub fn new(blockmodel: Blockmodel) -> Self {
        Snapshot {
            num_communities: blockmodel.num_communities(),
            description_length: blockmodel.description_length(),
            blockmodel,
        }
    }
}

/// What to try next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Start from the snapshot in `from` and merge down to `target` communities.
    Next { from: Slot, target: usize },
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    High,
    Mid,
    Low,
}

/// Up to three snapshots with strictly decreasing community counts
/// `high > mid > low`, where `mid` has the smallest description length seen.
#[derive(Clone, Debug, Default)]
pub struct GoldenBracket {
    high: Option<Snapshot>,
    mid: Option<Snapshot>,
    low: Option<Snapshot>,
}

impl GoldenBracket {
    pub fn new() -> Self {
        Self::default()
    }

    /// The bracket is established once a snapshot below the best one exists.
    pub fn established(&self) -> bool {
        self.low.is_some()
    }

    pub fn best(&self) -> Option<&Snapshot> {
        self.mid.as_ref()
    }

    pub fn into_best(self) -> Option<Snapshot> {
        self.mid
    }

    pub fn get(&self, slot: Slot) -> Option<&Snapshot> {
        match slot {
            Slot::High => self.high.as_ref(),
            Slot::Mid => self.mid.as_ref(),
            Slot::Low => self.low.as_ref(),
        }
    }

    /// `(high, mid, low)` community counts.
    pub fn counts(&self) -> (Option<usize>, Option<usize>, Option<usize>) {
        let n = |s: &Option<Snapshot>| s.as_ref().map(|s| s.num_communities);
        (n(&self.high), n(&self.mid), n(&self.low))
    }

    pub fn insert(&mut self, snap: Snapshot) {
        let Some(mid) = &self.mid else {
            self.mid = Some(snap);
            return;
        };
        if snap.description_length <= mid.description_length {
            let old = self.mid.replace(snap).expect("mid present");
            let new_count = self.mid.as_ref().expect("mid present").num_communities;
            if old.num_communities > new_count {
                self.high = Some(old);
            } else {
                self.low = Some(old);
            }
        } else if snap.num_communities < mid.num_communities {
            self.low = Some(snap);
        } else {
            self.high = Some(snap);
        }
    }

    /// Chooses the next community count. Before the bracket is established
    /// the best count is scaled by `reduction_rate`; afterwards the wider
    /// of the two sub-intervals is probed at its golden-ratio point. The
    /// search ends when neither sub-interval has an interior point left.
    pub fn next_step(&self, reduction_rate: f64) -> Step {
        let Some(mid) = &self.mid else { return Step::Done };
        let m = mid.num_communities;
        let Some(low) = &self.low else {
            let target = (m as f64 * reduction_rate).floor() as usize;
            if target < 1 || target >= m {
                return Step::Done;
            }
            return Step::Next { from: Slot::Mid, target };
        };
        let upper = self.high.as_ref().map_or(0, |h| h.num_communities - m);
        let lower = m - low.num_communities;
        if upper <= 1 && lower <= 1 {
            return Step::Done;
        }
        let (from, hi, lo) = if upper >= lower {
            (Slot::High, m + upper, m)
        } else {
            (Slot::Mid, m, low.num_communities)
        };
        let probe = lo + ((hi - lo) as f64 * GOLDEN).round() as usize;
        Step::Next {
            from,
            target: probe.clamp(lo + 1, hi - 1),
        }
    }
}
