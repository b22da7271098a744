//! Degree-corrected blockmodel state and its description-length objective.
//!
//! The community matrix is stored twice, by rows and by columns, as sorted
//! sparse maps. Changes are expressed as [`DeltaEntries`] so that the change
//! in description length of a candidate move or merge can be evaluated from
//! the handful of cells it touches, without mutating the model.
//!
//! Merged-away communities stay in place as tombstones that forward to the
//! community they were merged into; [`Blockmodel::renumber`] compacts them.

mod delta;
pub mod objective;
mod sparse;

pub use delta::{DeltaEntries, VertexContext};
pub use objective::{h, model_term, null_description_length, xlogx};
pub use sparse::SparseRow;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Community matrix, its transpose, community degrees and vertex assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blockmodel {
    rows: Vec<SparseRow>,
    cols: Vec<SparseRow>,
    d_out: Vec<u64>,
    d_in: Vec<u64>,
    assignment: Vec<usize>,
    forward: Vec<usize>,
    num_dead: usize,
    num_edges: u64,
}

/// Pending effect of moving one vertex between communities.
#[derive(Clone, Debug, Default)]
pub struct MoveDelta {
    pub vertex: usize,
    pub from: usize,
    pub to: usize,
    pub entries: DeltaEntries,
    pub k_out: u64,
    pub k_in: u64,
    pub delta_ll: f64,
    pub delta_dl: f64,
}

/// Pending effect of merging community `from` into `into`.
#[derive(Clone, Debug, Default)]
pub struct MergeDelta {
    pub from: usize,
    pub into: usize,
    pub entries: DeltaEntries,
    pub delta_ll: f64,
    pub delta_dl: f64,
}

/// Forward chain lookup with no mutation.
fn resolve(forward: &[usize], mut c: usize) -> usize {
    while forward[c] != c {
        c = forward[c];
    }
    c
}

impl Blockmodel {
    /// Builds the model of `assignment` over `num_communities` community slots.
    pub fn build(g: &Graph, assignment: Vec<usize>, num_communities: usize) -> Result<Blockmodel> {
        if assignment.len() != g.num_vertices() {
            return Err(Error::Input(format!(
                "assignment has {} entries for {} vertices",
                assignment.len(),
                g.num_vertices()
            )));
        }
        if let Some((v, &c)) = assignment.iter().enumerate().find(|(_, &c)| c >= num_communities) {
            return Err(Error::Input(format!(
                "vertex {v} assigned to community {c} outside 0..{num_communities}"
            )));
        }
        let mut cells: Vec<(usize, usize, u64)> = g
            .edges()
            .map(|(u, w, m)| (assignment[u], assignment[w], m))
            .collect();
        cells.sort_unstable_by_key(|e| (e.0, e.1));
        let mut rows = vec![SparseRow::new(); num_communities];
        let mut cols = vec![SparseRow::new(); num_communities];
        let mut d_out = vec![0u64; num_communities];
        let mut d_in = vec![0u64; num_communities];
        let mut i = 0;
        while i < cells.len() {
            let (r, c, _) = cells[i];
            let mut count = 0;
            while i < cells.len() && cells[i].0 == r && cells[i].1 == c {
                count += cells[i].2;
                i += 1;
            }
            rows[r].push_sorted(c, count);
            // cells are visited in row-major order, so each column receives
            // its row keys in increasing order
            cols[c].push_sorted(r, count);
            d_out[r] += count;
            d_in[c] += count;
        }
        Ok(Blockmodel {
            rows,
            cols,
            d_out,
            d_in,
            assignment,
            forward: (0..num_communities).collect(),
            num_dead: 0,
            num_edges: g.num_edges(),
        })
    }

    /// Builds with `1 + max(assignment)` community slots.
    pub fn from_assignment(g: &Graph, assignment: Vec<usize>) -> Result<Blockmodel> {
        let c = assignment.iter().max().map_or(1, |&m| m + 1);
        Self::build(g, assignment, c)
    }

    /// Every vertex in its own community.
    pub fn singleton(g: &Graph) -> Blockmodel {
        let n = g.num_vertices();
        Self::build(g, (0..n).collect(), n.max(1)).expect("singleton assignment is valid")
    }

    /// Number of live (not merged-away) communities.
    pub fn num_communities(&self) -> usize {
        self.rows.len() - self.num_dead
    }

    /// Number of community slots, including tombstones.
    pub fn num_slots(&self) -> usize {
        self.rows.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_edges(&self) -> u64 {
        self.num_edges
    }

    pub fn is_live(&self, c: usize) -> bool {
        self.forward[c] == c
    }

    /// Whether every slot is live.
    pub fn is_compact(&self) -> bool {
        self.num_dead == 0
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.rows[row].get(col)
    }

    #[inline]
    pub fn row(&self, c: usize) -> &SparseRow {
        &self.rows[c]
    }

    #[inline]
    pub fn col(&self, c: usize) -> &SparseRow {
        &self.cols[c]
    }

    #[inline]
    pub fn d_out(&self, c: usize) -> u64 {
        self.d_out[c]
    }

    #[inline]
    pub fn d_in(&self, c: usize) -> u64 {
        self.d_in[c]
    }

    #[inline]
    pub fn d_total(&self, c: usize) -> u64 {
        self.d_out[c] + self.d_in[c]
    }

    /// Raw per-vertex community ids; entries may name merged-away
    /// communities until [`renumber`](Self::renumber) runs.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Community of `v`, following merge forwarding.
    pub fn community_of(&self, v: usize) -> usize {
        resolve(&self.forward, self.assignment[v])
    }

    /// Assignment with merge forwarding resolved.
    pub fn resolved_assignment(&self) -> Vec<usize> {
        (0..self.num_vertices()).map(|v| self.community_of(v)).collect()
    }

    /// Community a slot currently forwards to.
    pub fn resolve(&self, c: usize) -> usize {
        resolve(&self.forward, c)
    }

    /// `sum_ij B_ij ln(B_ij / (d_out_i d_in_j))`, evaluated as
    /// `sum B ln B - sum d_out ln d_out - sum d_in ln d_in`.
    pub fn log_likelihood(&self) -> f64 {
        let cells: f64 = self
            .rows
            .iter()
            .flat_map(|r| r.iter())
            .map(|(_, b)| xlogx(b as f64))
            .sum();
        let outs: f64 = self.d_out.iter().map(|&d| xlogx(d as f64)).sum();
        let ins: f64 = self.d_in.iter().map(|&d| xlogx(d as f64)).sum();
        cells - outs - ins
    }

    pub fn description_length(&self) -> f64 {
        model_term(self.num_communities(), self.num_vertices(), self.num_edges) - self.log_likelihood()
    }

    fn cells_delta(&self, entries: &DeltaEntries) -> f64 {
        entries
            .entries()
            .iter()
            .map(|&(r, c, d)| {
                let before = self.get(r, c) as f64;
                xlogx(before + d as f64) - xlogx(before)
            })
            .sum()
    }

    /// Fills `out` with the effect of moving `ctx.vertex` to `to`.
    pub fn move_delta_into(&self, ctx: &VertexContext, to: usize, out: &mut MoveDelta) {
        let v = ctx.vertex;
        let from = self.assignment[v];
        out.vertex = v;
        out.from = from;
        out.to = to;
        out.k_out = ctx.k_out;
        out.k_in = ctx.k_in;
        out.entries.clear();
        if from == to {
            out.entries.normalize();
            out.delta_ll = 0.0;
            out.delta_dl = 0.0;
            return;
        }
        for &(t, m) in &ctx.out {
            out.entries.push(from, t, -(m as i64));
            out.entries.push(to, t, m as i64);
        }
        for &(t, m) in &ctx.inn {
            out.entries.push(t, from, -(m as i64));
            out.entries.push(t, to, m as i64);
        }
        if ctx.self_loops > 0 {
            out.entries.push(from, from, -(ctx.self_loops as i64));
            out.entries.push(to, to, ctx.self_loops as i64);
        }
        out.entries.normalize();
        let (ko, ki) = (ctx.k_out as f64, ctx.k_in as f64);
        let deg = |d: u64, k: f64, sign: f64| xlogx(d as f64 + sign * k) - xlogx(d as f64);
        let degrees = deg(self.d_out[from], ko, -1.0)
            + deg(self.d_out[to], ko, 1.0)
            + deg(self.d_in[from], ki, -1.0)
            + deg(self.d_in[to], ki, 1.0);
        out.delta_ll = self.cells_delta(&out.entries) - degrees;
        out.delta_dl = -out.delta_ll;
    }

    pub fn move_delta(&self, ctx: &VertexContext, to: usize) -> MoveDelta {
        let mut out = MoveDelta::default();
        self.move_delta_into(ctx, to, &mut out);
        out
    }

    /// Change in description length if `v` moved from `from_c` to `to_c`.
    pub fn delta_dl_move(&self, v: usize, from_c: usize, to_c: usize, ctx: &VertexContext) -> Result<f64> {
        if ctx.vertex != v || self.assignment[v] != from_c {
            return Err(Error::Blockmodel(format!(
                "vertex {v} is not in community {from_c} or context belongs to another vertex"
            )));
        }
        self.check_live(to_c)?;
        Ok(self.move_delta(ctx, to_c).delta_dl)
    }

    fn apply_entries(&mut self, entries: &DeltaEntries) {
        for &(r, c, d) in entries.entries() {
            self.rows[r].add(c, d);
            self.cols[c].add(r, d);
        }
    }

    /// Applies a delta computed against the current state.
    pub fn apply_move_delta(&mut self, delta: &MoveDelta) {
        if delta.from == delta.to {
            return;
        }
        debug_assert_eq!(self.assignment[delta.vertex], delta.from);
        self.apply_entries(&delta.entries);
        self.d_out[delta.from] -= delta.k_out;
        self.d_out[delta.to] += delta.k_out;
        self.d_in[delta.from] -= delta.k_in;
        self.d_in[delta.to] += delta.k_in;
        self.assignment[delta.vertex] = delta.to;
    }

    /// Moves `ctx.vertex` to `to_c` and returns the change in description length.
    pub fn apply_move(&mut self, to_c: usize, ctx: &VertexContext) -> Result<f64> {
        self.check_live(to_c)?;
        let delta = self.move_delta(ctx, to_c);
        self.apply_move_delta(&delta);
        Ok(delta.delta_dl)
    }

    fn check_live(&self, c: usize) -> Result<()> {
        if c >= self.num_slots() {
            return Err(Error::Blockmodel(format!("community {c} does not exist")));
        }
        if !self.is_live(c) {
            return Err(Error::Blockmodel(format!("community {c} was already merged away")));
        }
        Ok(())
    }

    /// Effect of folding every row and column of `from` into `into`.
    pub fn merge_delta(&self, from: usize, into: usize) -> Result<MergeDelta> {
        if from == into {
            return Err(Error::Blockmodel(format!("cannot merge community {from} into itself")));
        }
        self.check_live(from)?;
        self.check_live(into)?;
        Ok(self.merge_delta_unchecked(from, into))
    }

    pub(crate) fn merge_delta_unchecked(&self, from: usize, into: usize) -> MergeDelta {
        let mut entries = DeltaEntries::new();
        for (j, cnt) in self.rows[from].iter() {
            let target = if j == from { into } else { j };
            entries.push(from, j, -(cnt as i64));
            entries.push(into, target, cnt as i64);
        }
        for (i, cnt) in self.cols[from].iter() {
            if i == from {
                continue;
            }
            entries.push(i, from, -(cnt as i64));
            entries.push(i, into, cnt as i64);
        }
        entries.normalize();
        let deg = |a: u64, b: u64| xlogx((a + b) as f64) - xlogx(a as f64) - xlogx(b as f64);
        let degrees = deg(self.d_out[from], self.d_out[into]) + deg(self.d_in[from], self.d_in[into]);
        let delta_ll = self.cells_delta(&entries) - degrees;
        let c = self.num_communities();
        let model = model_term(c - 1, self.num_vertices(), self.num_edges)
            - model_term(c, self.num_vertices(), self.num_edges);
        MergeDelta {
            from,
            into,
            entries,
            delta_ll,
            delta_dl: model - delta_ll,
        }
    }

    pub fn delta_dl_merge(&self, from: usize, into: usize) -> Result<f64> {
        Ok(self.merge_delta(from, into)?.delta_dl)
    }

    /// Merges `from` into `into`, leaving `from` as a forwarding tombstone.
    /// Returns the change in description length.
    pub fn apply_merge(&mut self, from: usize, into: usize) -> Result<f64> {
        let delta = self.merge_delta(from, into)?;
        self.apply_entries(&delta.entries);
        self.d_out[into] += self.d_out[from];
        self.d_in[into] += self.d_in[from];
        self.d_out[from] = 0;
        self.d_in[from] = 0;
        self.forward[from] = into;
        self.num_dead += 1;
        Ok(delta.delta_dl)
    }

    /// Compacts live communities to `0..C'` preserving their relative
    /// order, resolves every vertex through the forwarding chains (with path
    /// compression) and returns the old-slot → new-id map (`usize::MAX` for
    /// tombstones).
    pub fn renumber(&mut self) -> Vec<usize> {
        let slots = self.num_slots();
        // path compression over the forwarding forest
        for c in 0..slots {
            let root = resolve(&self.forward, c);
            let mut cur = c;
            while self.forward[cur] != root {
                let next = self.forward[cur];
                self.forward[cur] = root;
                cur = next;
            }
        }
        let mut map = vec![usize::MAX; slots];
        let mut next = 0;
        for (c, slot) in map.iter_mut().enumerate() {
            if self.forward[c] == c {
                *slot = next;
                next += 1;
            }
        }
        if self.num_dead == 0 {
            return map;
        }
        for a in &mut self.assignment {
            *a = map[self.forward[*a]];
        }
        let mut rows = Vec::with_capacity(next);
        let mut cols = Vec::with_capacity(next);
        let mut d_out = Vec::with_capacity(next);
        let mut d_in = Vec::with_capacity(next);
        for c in 0..slots {
            if map[c] == usize::MAX {
                debug_assert!(self.rows[c].is_empty() && self.cols[c].is_empty());
                continue;
            }
            let mut r = std::mem::take(&mut self.rows[c]);
            r.remap_monotone(&map);
            rows.push(r);
            let mut k = std::mem::take(&mut self.cols[c]);
            k.remap_monotone(&map);
            cols.push(k);
            d_out.push(self.d_out[c]);
            d_in.push(self.d_in[c]);
        }
        self.rows = rows;
        self.cols = cols;
        self.d_out = d_out;
        self.d_in = d_in;
        self.forward = (0..next).collect();
        self.num_dead = 0;
        map
    }

    /// Nonzero cells in row-major order.
    pub fn triples(&self) -> Vec<(usize, usize, u64)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, b)| (i, j, b)))
            .collect()
    }

    /// 64-bit FNV-1a digest over the slot count and the sorted nonzero
    /// `(row, col, count)` triples. Stable across processes and builds.
    pub fn checksum(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET;
        let mut feed = |x: u64| {
            for byte in x.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(PRIME);
            }
        };
        feed(self.num_slots() as u64);
        for (i, r) in self.rows.iter().enumerate() {
            for (j, b) in r.iter() {
                feed(i as u64);
                feed(j as u64);
                feed(b);
            }
        }
        hash
    }

    /// Verifies transpose, degree and edge-count coherence.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Blockmodel(m));
        let mut total = 0u64;
        for (i, r) in self.rows.iter().enumerate() {
            for (j, b) in r.iter() {
                if self.cols[j].get(i) != b {
                    return fail(format!("transpose mismatch at ({i}, {j})"));
                }
                total += b;
            }
            if r.sum() != self.d_out[i] {
                return fail(format!("d_out mismatch for community {i}"));
            }
        }
        for (j, c) in self.cols.iter().enumerate() {
            if c.sum() != self.d_in[j] {
                return fail(format!("d_in mismatch for community {j}"));
            }
            for (i, b) in c.iter() {
                if self.rows[i].get(j) != b {
                    return fail(format!("transpose mismatch at ({i}, {j})"));
                }
            }
        }
        if total != self.num_edges {
            return fail(format!("matrix holds {total} edges, graph has {}", self.num_edges));
        }
        Ok(())
    }
}
