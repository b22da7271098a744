//! Exact distributed SBP: every rank keeps a full replica of the
//! blockmodel, works on the communities or vertices it owns, and the
//! replicas are brought back in step through all-gathers after every
//! merge phase and every MCMC sweep.

mod schedule;
mod wire;

use std::cell::Cell;
use std::time::Instant;

pub use schedule::{degree_balanced_schedule, OwnershipSchedule};
pub use wire::{decode_merge_proposals, decode_move_records, encode_merge_proposals, encode_move_records, MoveRecord};

use crate::blockmodel::Blockmodel;
use crate::comm::Communicator;
use crate::error::{CommError, Error, Result};
use crate::graph::Graph;
use crate::inference::{
    apply_best_merges, hybrid_sweep, propose_merges, search, ConvergenceMonitor, McmcOutcome, MergeProposal,
    PhaseExecutor, PhaseStreams, SbpConfig, SbpResult, SweepPlan, SweepScratch,
};
use crate::wire::{put_u64, Reader};

fn encode_triples(triples: &[(usize, usize, u64)]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 24 * triples.len());
    put_u64(&mut out, triples.len() as u64);
    for &(i, j, b) in triples {
        put_u64(&mut out, i as u64);
        put_u64(&mut out, j as u64);
        put_u64(&mut out, b);
    }
    out
}

fn decode_triples(bytes: &[u8]) -> Result<Vec<(usize, usize, u64)>> {
    let mut r = Reader::new(bytes);
    let n = r.count(24)?;
    (0..n)
        .map(|_| Ok((r.usize_value()?, r.usize_value()?, r.u64()?)))
        .collect()
}

/// First cell where two sorted triple lists disagree.
fn first_difference(a: &[(usize, usize, u64)], b: &[(usize, usize, u64)]) -> String {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return "matrices agree; slot counts differ".into(),
            (Some(&(r, c, x)), None) => return format!("cell ({r}, {c}): {x} vs 0"),
            (None, Some(&(r, c, y))) => return format!("cell ({r}, {c}): 0 vs {y}"),
            (Some(&(r1, c1, x)), Some(&(r2, c2, y))) => {
                if (r1, c1) == (r2, c2) {
                    if x != y {
                        return format!("cell ({r1}, {c1}): {x} vs {y}");
                    }
                    i += 1;
                    j += 1;
                } else if (r1, c1) < (r2, c2) {
                    return format!("cell ({r1}, {c1}): {x} vs 0");
                } else {
                    return format!("cell ({r2}, {c2}): 0 vs {y}");
                }
            }
        }
    }
}

/// All-gathers replica checksums and fails with the first diverging cell
/// if any rank disagrees with rank 0.
pub fn verify_replicas<C: Communicator + ?Sized>(comm: &C, b: &Blockmodel) -> Result<()> {
    let sums = comm.allgather(&b.checksum().to_le_bytes())?;
    if sums.iter().all(|s| s == &sums[0]) {
        return Ok(());
    }
    let all = comm.allgather(&encode_triples(&b.triples()))?;
    let reference = decode_triples(&all[0])?;
    for (rank, bytes) in all.iter().enumerate().skip(1) {
        if sums[rank] != sums[0] {
            let other = decode_triples(bytes)?;
            return Err(Error::ReplicaDivergence {
                rank,
                detail: format!("rank 0 vs rank {rank}, {}", first_difference(&reference, &other)),
            });
        }
    }
    unreachable!("some checksum differs from rank 0")
}

/// Runs both phases as their distributed variants over `comm`.
pub struct EdistExecutor<'a, C: Communicator + ?Sized> {
    comm: &'a C,
    cfg: SbpConfig,
    schedule: OwnershipSchedule,
    plan: SweepPlan,
    sync_points: Cell<usize>,
}

impl<'a, C: Communicator + ?Sized> EdistExecutor<'a, C> {
    pub fn new(g: &Graph, cfg: &SbpConfig, comm: &'a C) -> Result<Self> {
        let schedule = degree_balanced_schedule(&g.degrees(), comm.size())?;
        let plan = SweepPlan::new(g, schedule.vertices(comm.rank()).to_vec(), cfg);
        Ok(EdistExecutor {
            comm,
            cfg: cfg.clone(),
            schedule,
            plan,
            sync_points: Cell::new(0),
        })
    }

    pub fn schedule(&self) -> &OwnershipSchedule {
        &self.schedule
    }

    /// Synchronization points passed so far.
    pub fn sync_points(&self) -> usize {
        self.sync_points.get()
    }

    fn streams(&self, phase: u64) -> PhaseStreams {
        PhaseStreams {
            seed: self.cfg.seed,
            rank: self.comm.rank() as u64,
            phase,
        }
    }

    fn synced(&self, b: &Blockmodel) -> Result<()> {
        self.sync_points.set(self.sync_points.get() + 1);
        if self.cfg.verify_replicas {
            verify_replicas(self.comm, b)?;
        }
        Ok(())
    }

    /// One distributed block-merge phase.
    pub fn distributed_block_merge(&self, b: &mut Blockmodel, target: usize, phase: u64) -> Result<usize> {
        if target < 1 {
            return Err(Error::Config("merge target must be at least 1".into()));
        }
        if target >= b.num_communities() {
            return Ok(0);
        }
        let rank = self.comm.rank();
        let mut rng = self.streams(phase).main();
        let mine = propose_merges(
            b,
            self.cfg.merge_proposals_per_community,
            |c| self.schedule.owns_community(rank, c),
            &mut rng,
        );
        let gathered = self.comm.allgather(&encode_merge_proposals(&mine))?;
        let slots = b.num_slots();
        let mut all: Vec<MergeProposal> = Vec::new();
        for (r, bytes) in gathered.iter().enumerate() {
            for p in decode_merge_proposals(bytes)? {
                if p.community >= slots || p.target >= slots || !self.schedule.owns_community(r, p.community) {
                    return Err(CommError::Protocol(format!(
                        "rank {r} proposed merging {} into {} with {slots} communities",
                        p.community, p.target
                    ))
                    .into());
                }
                all.push(p);
            }
        }
        let merges = apply_best_merges(b, all, target)?;
        self.synced(b)?;
        Ok(merges)
    }

    /// Exchanges one sweep's accepted moves and rebuilds the replica from
    /// the synchronized assignment.
    fn reconcile(&self, g: &Graph, b: &mut Blockmodel, mine: &[MoveRecord]) -> Result<usize> {
        let gathered = self.comm.allgather(&encode_move_records(mine))?;
        let slots = b.num_slots();
        let mut all = Vec::new();
        for (r, bytes) in gathered.iter().enumerate() {
            for m in decode_move_records(bytes)? {
                if m.vertex >= g.num_vertices() || m.destination >= slots || self.schedule.owner_of(m.vertex) != r {
                    return Err(CommError::Protocol(format!(
                        "rank {r} reported moving vertex {} to community {}",
                        m.vertex, m.destination
                    ))
                    .into());
                }
                all.push(m);
            }
        }
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0].vertex == w[1].vertex) {
            return Err(CommError::Protocol(format!("vertex {} moved twice in one sweep", w[0].vertex)).into());
        }
        let mut assignment = b.assignment().to_vec();
        for m in &all {
            assignment[m.vertex] = m.destination;
        }
        *b = Blockmodel::build(g, assignment, slots)?;
        self.synced(b)?;
        Ok(all.len())
    }

    /// One distributed MCMC phase.
    pub fn distributed_mcmc_phase(
        &self,
        g: &Graph,
        b: &mut Blockmodel,
        threshold: f64,
        phase: u64,
    ) -> Result<McmcOutcome> {
        let start = Instant::now();
        let streams = self.streams(phase);
        let mut rng = streams.main();
        let mut scratch = SweepScratch::default();
        let mut monitor = ConvergenceMonitor::new(threshold);
        let mut out = McmcOutcome::default();
        let mut dl = b.description_length();
        let mut moves = Vec::new();
        for sweep in 0..self.cfg.mcmc_max_sweeps {
            moves.clear();
            hybrid_sweep(
                g,
                b,
                &self.plan,
                self.cfg.beta,
                &mut rng,
                streams,
                sweep as u64,
                &mut scratch,
                |vertex, destination| moves.push(MoveRecord { vertex, destination }),
            );
            out.accepted += self.reconcile(g, b, &moves)?;
            out.sweeps += 1;
            let next = b.description_length();
            out.dl_trace.push(next);
            let done = monitor.update(dl, next);
            dl = next;
            if done {
                break;
            }
        }
        out.seconds = start.elapsed().as_secs_f64();
        Ok(out)
    }
}

impl<C: Communicator + ?Sized> PhaseExecutor for EdistExecutor<'_, C> {
    fn merge_phase(&mut self, _g: &Graph, b: &mut Blockmodel, target: usize, phase: u64) -> Result<usize> {
        self.distributed_block_merge(b, target, phase)
    }

    fn mcmc_phase(&mut self, g: &Graph, b: &mut Blockmodel, threshold: f64, phase: u64) -> Result<McmcOutcome> {
        self.distributed_mcmc_phase(g, b, threshold, phase)
    }
}

/// Result of a distributed run, identical on every rank.
#[derive(Clone, Debug)]
pub struct EdistResult {
    pub result: SbpResult,
    pub sync_points: usize,
}

/// Full search with both phases distributed. Every rank must hold the
/// whole graph.
pub fn edist_run<C: Communicator + ?Sized>(g: &Graph, cfg: &SbpConfig, comm: &C) -> Result<EdistResult> {
    cfg.validate()?;
    if comm.size() > g.num_vertices().max(1) {
        return Err(Error::Config(format!(
            "{} ranks exceed {} vertices",
            comm.size(),
            g.num_vertices()
        )));
    }
    let mut exec = EdistExecutor::new(g, cfg, comm)?;
    let result = search(g, Blockmodel::singleton(g), false, cfg, &mut exec)?;
    Ok(EdistResult {
        result,
        sync_points: exec.sync_points(),
    })
}
