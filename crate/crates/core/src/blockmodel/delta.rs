use crate::graph::Graph;

/// Sparse set of signed changes to the community matrix.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeltaEntries {
    entries: Vec<(usize, usize, i64)>,
    normalized: bool,
}

impl DeltaEntries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.normalized = false;
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, delta: i64) {
        self.entries.push((row, col, delta));
        self.normalized = false;
    }

    /// Sorts by cell, merges duplicates and drops cancelled cells.
    pub fn normalize(&mut self) {
        if self.normalized {
            return;
        }
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut write = 0;
        for read in 0..self.entries.len() {
            let e = self.entries[read];
            if write > 0 && self.entries[write - 1].0 == e.0 && self.entries[write - 1].1 == e.1 {
                self.entries[write - 1].2 += e.2;
            } else {
                self.entries[write] = e;
                write += 1;
            }
        }
        self.entries.truncate(write);
        self.entries.retain(|e| e.2 != 0);
        self.normalized = true;
    }

    /// Normalized entries, sorted by `(row, col)`.
    pub fn entries(&self) -> &[(usize, usize, i64)] {
        debug_assert!(self.normalized);
        &self.entries
    }

    /// Change recorded for one cell (normalized entries only).
    pub fn get(&self, row: usize, col: usize) -> i64 {
        debug_assert!(self.normalized);
        match self.entries.binary_search_by_key(&(row, col), |e| (e.0, e.1)) {
            Ok(i) => self.entries[i].2,
            Err(_) => 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A vertex's incident edges summarized by neighbor community.
///
/// Self-loops are kept apart so that they travel with the vertex when it
/// changes community.
#[derive(Clone, Debug, Default)]
pub struct VertexContext {
    pub vertex: usize,
    /// `(community of target, multiplicity)` over non-loop out-edges.
    pub out: Vec<(usize, u64)>,
    /// `(community of source, multiplicity)` over non-loop in-edges.
    pub inn: Vec<(usize, u64)>,
    pub self_loops: u64,
    pub k_out: u64,
    pub k_in: u64,
}

fn aggregate(list: &mut Vec<(usize, u64)>) {
    if list.len() < 2 {
        return;
    }
    list.sort_unstable_by_key(|e| e.0);
    let mut write = 0;
    for read in 0..list.len() {
        let e = list[read];
        if write > 0 && list[write - 1].0 == e.0 {
            list[write - 1].1 += e.1;
        } else {
            list[write] = e;
            write += 1;
        }
    }
    list.truncate(write);
}

impl VertexContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn compute(g: &Graph, assignment: &[usize], v: usize) -> Self {
        let mut ctx = Self::new();
        ctx.fill(g, assignment, v);
        ctx
    }

    /// Recomputes in place, reusing allocations.
    pub fn fill(&mut self, g: &Graph, assignment: &[usize], v: usize) {
        self.vertex = v;
        self.out.clear();
        self.inn.clear();
        self.self_loops = 0;
        for &(w, m) in g.out_neighbors(v) {
            if w == v {
                self.self_loops += m;
            } else {
                self.out.push((assignment[w], m));
            }
        }
        for &(u, m) in g.in_neighbors(v) {
            if u != v {
                self.inn.push((assignment[u], m));
            }
        }
        aggregate(&mut self.out);
        aggregate(&mut self.inn);
        self.k_out = g.out_degree(v);
        self.k_in = g.in_degree(v);
    }

    /// Total degree, with each self-loop counted twice.
    pub fn degree(&self) -> u64 {
        self.k_out + self.k_in
    }
}
