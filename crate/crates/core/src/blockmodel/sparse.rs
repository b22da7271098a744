/// One row (or column) of the community edge-count matrix: a map from
/// community id to a positive count, kept sorted by id.
///
/// Sorted storage makes iteration order a function of the contents alone,
/// so two blockmodels with equal counts behave identically no matter how
/// they were built.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseRow {
    entries: Vec<(usize, u64)>,
}

impl SparseRow {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn get(&self, key: usize) -> u64 {
        match self.entries.binary_search_by_key(&key, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Adds a signed amount to `key`; entries that reach zero are removed.
    ///
    /// Panics if the count would go negative, which always indicates a
    /// corrupted delta.
    pub fn add(&mut self, key: usize, delta: i64) {
        if delta == 0 {
            return;
        }
        match self.entries.binary_search_by_key(&key, |e| e.0) {
            Ok(i) => {
                let next = self.entries[i].1 as i64 + delta;
                assert!(next >= 0, "negative count for key {key}");
                if next == 0 {
                    self.entries.remove(i);
                } else {
                    self.entries[i].1 = next as u64;
                }
            }
            Err(i) => {
                assert!(delta > 0, "negative count for absent key {key}");
                self.entries.insert(i, (key, delta as u64));
            }
        }
    }

    #[inline]
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn as_slice(&self) -> &[(usize, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn sum(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Rewrites keys through a monotone map; order is preserved.
    pub(crate) fn remap_monotone(&mut self, map: &[usize]) {
        for e in &mut self.entries {
            e.0 = map[e.0];
        }
        debug_assert!(self.entries.windows(2).all(|w| w[0].0 < w[1].0));
    }

    /// Appends an entry whose key is larger than every existing key.
    pub(crate) fn push_sorted(&mut self, key: usize, count: u64) {
        debug_assert!(self.entries.last().is_none_or(|e| e.0 < key));
        self.entries.push((key, count));
    }
}
