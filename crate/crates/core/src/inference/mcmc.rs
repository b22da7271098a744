//! Vertex-move sweeps and the MCMC phase.

use std::time::Instant;

use crate::blockmodel::{Blockmodel, MoveDelta, VertexContext};
use crate::graph::Graph;
use crate::rng::{stream, SbpRng};

use super::config::SbpConfig;
use super::proposal::{accept_move, move_probability, propose_move, reverse_move_probability};

/// Exponentially smoothed sweep-to-sweep change in description length.
#[derive(Clone, Debug)]
pub struct ConvergenceMonitor {
    threshold: f64,
    smoothed: Option<f64>,
}

impl ConvergenceMonitor {
    const ALPHA: f64 = 0.5;

    pub fn new(threshold: f64) -> Self {
        ConvergenceMonitor {
            threshold,
            smoothed: None,
        }
    }

    /// Records one sweep and reports whether the chain has settled.
    pub fn update(&mut self, dl_before: f64, dl_after: f64) -> bool {
        let change = (dl_before - dl_after).abs();
        let s = match self.smoothed {
            None => change,
            Some(prev) => Self::ALPHA * change + (1.0 - Self::ALPHA) * prev,
        };
        self.smoothed = Some(s);
        s <= self.threshold * dl_before.max(dl_after)
    }
}

/// Reusable buffers for one sweeping thread.
#[derive(Default)]
pub struct SweepScratch {
    ctx: VertexContext,
    delta: MoveDelta,
}

/// Evaluates one proposal for `v` against `b`. Returns the accepted target.
fn try_vertex(
    g: &Graph,
    b: &Blockmodel,
    v: usize,
    beta: f64,
    rng: &mut SbpRng,
    scratch: &mut SweepScratch,
) -> Option<usize> {
    scratch.ctx.fill(g, b.assignment(), v);
    let s = propose_move(b, &scratch.ctx, rng)?;
    b.move_delta_into(&scratch.ctx, s, &mut scratch.delta);
    let p_fwd = move_probability(b, &scratch.ctx, s);
    let p_back = reverse_move_probability(b, &scratch.ctx, &scratch.delta);
    accept_move(scratch.delta.delta_dl, p_fwd, p_back, beta, rng).then_some(s)
}

/// Sequentially proposes (and possibly applies) one move for every vertex
/// in `vertices`, in order. `on_move` sees each accepted `(vertex, target)`.
pub fn sweep_vertices(
    g: &Graph,
    b: &mut Blockmodel,
    vertices: &[usize],
    beta: f64,
    rng: &mut SbpRng,
    scratch: &mut SweepScratch,
    mut on_move: impl FnMut(usize, usize),
) -> usize {
    let mut accepted = 0;
    for &v in vertices {
        if try_vertex(g, b, v, beta, rng, scratch).is_some() {
            b.apply_move_delta(&scratch.delta);
            on_move(v, scratch.delta.to);
            accepted += 1;
        }
    }
    accepted
}

/// Splits `vertices` into the top `fraction` by degree (ties broken by id)
/// and the rest. Both halves come back in ascending id order.
pub fn split_by_degree(g: &Graph, vertices: &[usize], fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let n_high = ((vertices.len() as f64) * fraction).ceil() as usize;
    let mut ranked = vertices.to_vec();
    ranked.sort_unstable_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut high = ranked[..n_high.min(ranked.len())].to_vec();
    let mut low = ranked[n_high.min(ranked.len())..].to_vec();
    high.sort_unstable();
    low.sort_unstable();
    (high, low)
}

/// Seeds for the streams a phase draws from.
#[derive(Clone, Copy, Debug)]
pub struct PhaseStreams {
    pub seed: u64,
    pub rank: u64,
    pub phase: u64,
}

impl PhaseStreams {
    pub fn main(&self) -> SbpRng {
        stream(self.seed, &[self.rank, self.phase])
    }

    pub fn worker(&self, sweep: u64, worker: u64) -> SbpRng {
        stream(self.seed, &[self.rank, self.phase, sweep, worker])
    }
}

/// How an MCMC phase visits vertices.
pub struct SweepPlan {
    pub vertices: Vec<usize>,
    high: Vec<usize>,
    low: Vec<usize>,
    workers: usize,
}

impl SweepPlan {
    pub fn new(g: &Graph, vertices: Vec<usize>, cfg: &SbpConfig) -> Self {
        let (high, low) = if cfg.workers > 1 {
            split_by_degree(g, &vertices, cfg.hybrid_high_degree_fraction)
        } else {
            (Vec::new(), Vec::new())
        };
        SweepPlan {
            vertices,
            high,
            low,
            workers: cfg.workers,
        }
    }

    pub fn all(g: &Graph, cfg: &SbpConfig) -> Self {
        Self::new(g, (0..g.num_vertices()).collect(), cfg)
    }
}

/// One hybrid sweep. With a single worker this is exactly
/// [`sweep_vertices`] over the plan's vertices. Otherwise high-degree
/// vertices are swept sequentially, then the remaining vertices are
/// evaluated in parallel against a frozen copy of the model and the
/// accepted moves are applied in ascending vertex order.
#[allow(clippy::too_many_arguments)]
pub fn hybrid_sweep(
    g: &Graph,
    b: &mut Blockmodel,
    plan: &SweepPlan,
    beta: f64,
    rng: &mut SbpRng,
    streams: PhaseStreams,
    sweep: u64,
    scratch: &mut SweepScratch,
    mut on_move: impl FnMut(usize, usize),
) -> usize {
    if plan.workers <= 1 || plan.low.is_empty() {
        let order = if plan.workers <= 1 { &plan.vertices } else { &plan.high };
        return sweep_vertices(g, b, order, beta, rng, scratch, on_move);
    }
    let mut accepted = sweep_vertices(g, b, &plan.high, beta, rng, scratch, &mut on_move);
    let chunk = plan.low.len().div_ceil(plan.workers);
    let frozen: &Blockmodel = b;
    let mut moves: Vec<(usize, usize)> = std::thread::scope(|scope| {
        let handles: Vec<_> = plan
            .low
            .chunks(chunk)
            .enumerate()
            .map(|(w, part)| {
                scope.spawn(move || {
                    let mut rng = streams.worker(sweep, w as u64);
                    let mut scratch = SweepScratch::default();
                    part.iter()
                        .filter_map(|&v| try_vertex(g, frozen, v, beta, &mut rng, &mut scratch).map(|s| (v, s)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    moves.sort_unstable();
    for (v, s) in moves {
        if b.community_of(v) == s {
            continue;
        }
        scratch.ctx.fill(g, b.assignment(), v);
        b.move_delta_into(&scratch.ctx, s, &mut scratch.delta);
        b.apply_move_delta(&scratch.delta);
        on_move(v, s);
        accepted += 1;
    }
    accepted
}

/// Summary of one MCMC phase.
#[derive(Clone, Debug, Default)]
pub struct McmcOutcome {
    pub sweeps: usize,
    pub accepted: usize,
    /// Description length after each sweep.
    pub dl_trace: Vec<f64>,
    pub seconds: f64,
}

/// Runs sweeps until the smoothed change in description length drops below
/// `threshold` times the current description length, or the sweep budget
/// runs out.
pub fn mcmc_phase(
    g: &Graph,
    b: &mut Blockmodel,
    plan: &SweepPlan,
    cfg: &SbpConfig,
    threshold: f64,
    streams: PhaseStreams,
) -> McmcOutcome {
    let start = Instant::now();
    let mut rng = streams.main();
    let mut scratch = SweepScratch::default();
    let mut monitor = ConvergenceMonitor::new(threshold);
    let mut out = McmcOutcome::default();
    let mut dl = b.description_length();
    for sweep in 0..cfg.mcmc_max_sweeps {
        out.accepted += hybrid_sweep(g, b, plan, cfg.beta, &mut rng, streams, sweep as u64, &mut scratch, |_, _| {});
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
    out
}
