//! Divide-and-conquer SBP: each rank partitions its round-robin share of
//! the vertices on its own, rank 0 combines the partial results pairwise
//! and fine-tunes the combined partition on the whole graph.

use crate::blockmodel::Blockmodel;
use crate::comm::Communicator;
use crate::error::{Error, Result};
use crate::graph::{dense_labels, Graph};
use crate::inference::{sbp_from, sbp_with_rank, SbpConfig, SbpResult};
use crate::wire::{put_u64, put_u64_seq, Reader};

/// One rank's partition of its subgraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialResult {
    pub rank: usize,
    /// Local vertex id → global vertex id, strictly increasing.
    pub vertex_map: Vec<usize>,
    /// Community of each local vertex, in `0..num_communities`.
    pub assignment: Vec<usize>,
    pub num_communities: usize,
}

impl PartialResult {
    /// `rank`, `num_communities`, then `vertex_map` and `assignment` as
    /// length-prefixed `u64` sequences.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * (self.vertex_map.len() + self.assignment.len()));
        put_u64(&mut out, self.rank as u64);
        put_u64(&mut out, self.num_communities as u64);
        put_u64_seq(&mut out, self.vertex_map.iter().map(|&v| v as u64));
        put_u64_seq(&mut out, self.assignment.iter().map(|&c| c as u64));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<PartialResult> {
        let bad = |m: String| Err(Error::Decode(m));
        let mut r = Reader::new(bytes);
        let rank = r.usize_value()?;
        let num_communities = r.usize_value()?;
        let to_usize = |xs: Vec<u64>| -> Result<Vec<usize>> {
            xs.into_iter()
                .map(|x| usize::try_from(x).map_err(|_| Error::Decode(format!("value {x} too large"))))
                .collect()
        };
        let vertex_map = to_usize(r.u64_seq()?)?;
        let assignment = to_usize(r.u64_seq()?)?;
        r.finish()?;
        if vertex_map.len() != assignment.len() {
            return bad(format!(
                "{} vertices but {} assignments",
                vertex_map.len(),
                assignment.len()
            ));
        }
        if !vertex_map.windows(2).all(|w| w[0] < w[1]) {
            return bad("vertex map is not strictly increasing".into());
        }
        if let Some(&c) = assignment.iter().find(|&&c| c >= num_communities) {
            return bad(format!("community {c} outside 0..{num_communities}"));
        }
        Ok(PartialResult {
            rank,
            vertex_map,
            assignment,
            num_communities,
        })
    }
}

/// Folds `pb` into `pa`: on the subgraph induced by both vertex sets
/// (edges between them included), each of `pb`'s communities in turn is
/// merged into the `pa` community with the smallest change in description
/// length at that moment. The result keeps `pa`'s communities.
pub fn combine_pair(pa: &PartialResult, pb: &PartialResult, g: &Graph) -> Result<PartialResult> {
    if pa.num_communities == 0 {
        return Ok(PartialResult {
            rank: pa.rank,
            ..pb.clone()
        });
    }
    let mut members: Vec<(usize, usize)> = pa
        .vertex_map
        .iter()
        .zip(&pa.assignment)
        .map(|(&v, &c)| (v, c))
        .chain(
            pb.vertex_map
                .iter()
                .zip(&pb.assignment)
                .map(|(&v, &c)| (v, pa.num_communities + c)),
        )
        .collect();
    members.sort_unstable();
    if members.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Input("partial results share a vertex".into()));
    }
    let vertex_map: Vec<usize> = members.iter().map(|m| m.0).collect();
    let labels: Vec<usize> = members.iter().map(|m| m.1).collect();
    let sub = g.induced(&vertex_map)?;
    let mut b = Blockmodel::build(&sub, labels, pa.num_communities + pb.num_communities)?;
    for q in 0..pb.num_communities {
        let from = pa.num_communities + q;
        let mut best: Option<(f64, usize)> = None;
        for p in 0..pa.num_communities {
            let d = b.delta_dl_merge(from, p)?;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, p));
            }
        }
        let (_, into) = best.expect("pa has communities");
        b.apply_merge(from, into)?;
    }
    b.renumber();
    Ok(PartialResult {
        rank: pa.rank,
        vertex_map,
        assignment: b.assignment().to_vec(),
        num_communities: pa.num_communities,
    })
}

/// Pairs up successive partials until at most `threshold` remain. Each
/// combination reduces the count by one, so `k` partials take exactly
/// `k - min(k, threshold)` combinations.
pub fn combine_partials(
    mut partials: Vec<PartialResult>,
    threshold: usize,
    g: &Graph,
) -> Result<(Vec<PartialResult>, usize)> {
    let threshold = threshold.max(1);
    let mut combines = 0;
    while partials.len() > threshold {
        let mut count = partials.len();
        let mut next = Vec::with_capacity(count.div_ceil(2));
        let mut iter = partials.into_iter();
        while let Some(a) = iter.next() {
            if count <= threshold {
                next.push(a);
                continue;
            }
            match iter.next() {
                Some(b) => {
                    next.push(combine_pair(&a, &b, g)?);
                    combines += 1;
                    count -= 1;
                }
                None => next.push(a),
            }
        }
        partials = next;
    }
    Ok((partials, combines))
}

/// Places the partials' communities in disjoint label ranges over the full
/// vertex set and relabels densely.
pub fn concatenate(partials: &[PartialResult], num_vertices: usize) -> Result<Vec<usize>> {
    let mut assignment = vec![usize::MAX; num_vertices];
    let mut offset = 0;
    for p in partials {
        for (&v, &c) in p.vertex_map.iter().zip(&p.assignment) {
            if v >= num_vertices || assignment[v] != usize::MAX {
                return Err(Error::Input(format!("vertex {v} missing from the graph or covered twice")));
            }
            assignment[v] = offset + c;
        }
        offset += p.num_communities;
    }
    if let Some(v) = assignment.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Input(format!("vertex {v} is not covered by any partial result")));
    }
    Ok(dense_labels(&assignment))
}

/// Vertices `rank, rank + n, rank + 2n, ...`.
pub fn round_robin_vertices(num_vertices: usize, num_ranks: usize, rank: usize) -> Vec<usize> {
    (rank..num_vertices).step_by(num_ranks).collect()
}

/// Partition of this rank's subgraph.
pub fn local_partial(g: &Graph, cfg: &SbpConfig, num_ranks: usize, rank: usize) -> Result<PartialResult> {
    let vertex_map = round_robin_vertices(g.num_vertices(), num_ranks, rank);
    if vertex_map.is_empty() {
        return Ok(PartialResult {
            rank,
            vertex_map,
            assignment: Vec::new(),
            num_communities: 0,
        });
    }
    let sub = g.induced(&vertex_map)?;
    let r = sbp_with_rank(&sub, cfg, rank as u64)?;
    Ok(PartialResult {
        rank,
        vertex_map,
        assignment: r.assignment,
        num_communities: r.num_communities,
    })
}

/// Outcome on the root rank.
#[derive(Clone, Debug)]
pub struct DcsbpResult {
    pub result: SbpResult,
    pub combines: usize,
    /// Communities in the concatenated partition before fine-tuning.
    pub merged_communities: usize,
}

/// Runs divide-and-conquer SBP. Returns `Some` on rank 0 and `None` elsewhere.
/// With one rank this is exactly the serial algorithm.
pub fn dcsbp_run<C: Communicator + ?Sized>(g: &Graph, cfg: &SbpConfig, comm: &C) -> Result<Option<DcsbpResult>> {
    cfg.validate()?;
    let n = comm.size();
    let rank = comm.rank();
    if n == 1 {
        let result = sbp_with_rank(g, cfg, 0)?;
        let merged_communities = result.num_communities;
        return Ok(Some(DcsbpResult {
            result,
            combines: 0,
            merged_communities,
        }));
    }
    let mine = local_partial(g, cfg, n, rank)?;
    if rank != 0 {
        comm.send_to_root(&mine.encode())?;
        return Ok(None);
    }
    let mut partials = vec![mine];
    for (sender, bytes) in comm.receive_at_root()? {
        let p = PartialResult::decode(&bytes)?;
        if p.rank != sender || p.vertex_map != round_robin_vertices(g.num_vertices(), n, sender) {
            return Err(Error::Decode(format!("rank {sender} sent a partial result for the wrong subgraph")));
        }
        partials.push(p);
    }
    let (remaining, combines) = combine_partials(partials, cfg.dcsbp_combine_threshold, g)?;
    let assignment = concatenate(&remaining, g.num_vertices())?;
    let merged = Blockmodel::from_assignment(g, assignment)?;
    let merged_communities = merged.num_communities();
    let result = sbp_from(g, merged, cfg, n as u64)?;
    Ok(Some(DcsbpResult {
        result,
        combines,
        merged_communities,
    }))
}
