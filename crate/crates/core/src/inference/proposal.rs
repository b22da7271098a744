//! Neighborhood-driven proposal distribution and Metropolis-Hastings
//! acceptance.
//!
//! From a vertex (or community) with current community `r`, pick an
//! incident edge uniformly and let `t` be the community at its other end.
//! With probability `C / (d_t + C)` the proposal is uniform over the `C - 1`
//! communities other than `r`; otherwise it is drawn in proportion to
//! `B[t][s] + B[s][t]` over `s != r`, falling back to uniform when that
//! weight vanishes. The hop probabilities below follow the same rule, so
//! the Hastings correction is exact.

use rand::Rng;

use crate::blockmodel::{Blockmodel, MoveDelta, VertexContext};

/// Probability that a hop through `t` lands on `s`, with `r` excluded.
/// `cell` reads the (possibly hypothetical) community matrix and `d_t` is
/// the total degree of `t`.
#[inline]
fn hop_probability(cell: impl Fn(usize, usize) -> u64, c: usize, d_t: u64, t: usize, s: usize, r: usize) -> f64 {
    let cf = c as f64;
    let dt = d_t as f64;
    let uniform = 1.0 / (cf - 1.0);
    let rest = d_t as i64 - cell(t, r) as i64 - cell(r, t) as i64;
    let directed = if rest > 0 {
        (cell(t, s) + cell(s, t)) as f64 / rest as f64
    } else {
        uniform
    };
    (cf * uniform + dt * directed) / (dt + cf)
}

/// Uniform draw in `0..c` skipping `exclude`.
fn uniform_other<R: Rng + ?Sized>(c: usize, exclude: usize, rng: &mut R) -> usize {
    let s = rng.random_range(0..c - 1);
    if s >= exclude {
        s + 1
    } else {
        s
    }
}

/// Second stage of the proposal: given the neighbor community `t`, choose
/// the target for an element currently in `r`.
fn hop_from<R: Rng + ?Sized>(b: &Blockmodel, t: usize, r: usize, rng: &mut R) -> usize {
    let c = b.num_slots();
    let d_t = b.d_total(t);
    let explore: f64 = rng.random();
    if explore * (d_t as f64 + c as f64) < c as f64 {
        return uniform_other(c, r, rng);
    }
    let rest = d_t - b.get(t, r) - b.get(r, t);
    if rest == 0 {
        return uniform_other(c, r, rng);
    }
    let mut x = rng.random_range(0..rest);
    for (s, m) in b.row(t).iter().chain(b.col(t).iter()) {
        if s == r {
            continue;
        }
        if x < m {
            return s;
        }
        x -= m;
    }
    unreachable!("neighbor weights sum to the residual degree")
}

/// Draws a target community for `ctx.vertex`. Returns `None` when there is
/// nowhere to go (fewer than two communities).
pub fn propose_move<R: Rng + ?Sized>(b: &Blockmodel, ctx: &VertexContext, rng: &mut R) -> Option<usize> {
    let c = b.num_slots();
    if c < 2 {
        return None;
    }
    let r = b.community_of(ctx.vertex);
    let k = ctx.degree();
    if k == 0 {
        return Some(uniform_other(c, r, rng));
    }
    let mut x = rng.random_range(0..k);
    let loops = 2 * ctx.self_loops;
    let t = 'pick: {
        if x < loops {
            break 'pick r;
        }
        x -= loops;
        for &(t, m) in ctx.out.iter().chain(ctx.inn.iter()) {
            if x < m {
                break 'pick t;
            }
            x -= m;
        }
        unreachable!("edge weights sum to the vertex degree")
    };
    Some(hop_from(b, t, r, rng))
}

/// Probability that [`propose_move`] returns `s` for `ctx.vertex`.
pub fn move_probability(b: &Blockmodel, ctx: &VertexContext, s: usize) -> f64 {
    let c = b.num_slots();
    let r = b.community_of(ctx.vertex);
    let k = ctx.degree();
    if k == 0 {
        return 1.0 / (c as f64 - 1.0);
    }
    let cell = |i, j| b.get(i, j);
    let mut p = 0.0;
    if ctx.self_loops > 0 {
        p += (2 * ctx.self_loops) as f64 * hop_probability(cell, c, b.d_total(r), r, s, r);
    }
    for &(t, m) in ctx.out.iter().chain(ctx.inn.iter()) {
        p += m as f64 * hop_probability(cell, c, b.d_total(t), t, s, r);
    }
    p / k as f64
}

/// Probability of proposing the way back, `delta.to -> delta.from`, in the
/// model that results from applying `delta`.
pub fn reverse_move_probability(b: &Blockmodel, ctx: &VertexContext, delta: &MoveDelta) -> f64 {
    let c = b.num_slots();
    let (r, s) = (delta.from, delta.to);
    let k = ctx.degree();
    if k == 0 {
        return 1.0 / (c as f64 - 1.0);
    }
    let cell = |i: usize, j: usize| (b.get(i, j) as i64 + delta.entries.get(i, j)) as u64;
    let degree_after = |t: usize| {
        let d = b.d_total(t);
        if t == r {
            d - k
        } else if t == s {
            d + k
        } else {
            d
        }
    };
    let mut p = 0.0;
    if ctx.self_loops > 0 {
        p += (2 * ctx.self_loops) as f64 * hop_probability(cell, c, degree_after(s), s, r, s);
    }
    for &(t, m) in ctx.out.iter().chain(ctx.inn.iter()) {
        p += m as f64 * hop_probability(cell, c, degree_after(t), t, r, s);
    }
    p / k as f64
}

/// Draws a merge partner for community `r`.
pub fn propose_merge<R: Rng + ?Sized>(b: &Blockmodel, r: usize, rng: &mut R) -> Option<usize> {
    let c = b.num_slots();
    if c < 2 {
        return None;
    }
    let k = b.d_total(r);
    if k == 0 {
        return Some(uniform_other(c, r, rng));
    }
    let mut x = rng.random_range(0..k);
    let t = 'pick: {
        for (t, m) in b.row(r).iter().chain(b.col(r).iter()) {
            if x < m {
                break 'pick t;
            }
            x -= m;
        }
        unreachable!("matrix weights sum to the community degree")
    };
    Some(hop_from(b, t, r, rng))
}

/// Metropolis-Hastings rule: accept when `u < exp(-beta * delta_dl) * p_back / p_fwd`.
/// A non-finite change in description length is always rejected.
pub fn accept_move<R: Rng + ?Sized>(delta_dl: f64, p_forward: f64, p_backward: f64, beta: f64, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    if !delta_dl.is_finite() {
        log::warn!("rejecting move with non-finite description-length change {delta_dl}");
        return false;
    }
    let ratio = (-beta * delta_dl).exp() * p_backward / p_forward;
    u < ratio.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::rng::stream;

    fn sample_graph() -> Graph {
        // two dense triangles, a bridge, a self-loop and an isolated vertex
        let edges = vec![
            (0, 1, 1),
            (1, 2, 2),
            (2, 0, 1),
            (3, 4, 1),
            (4, 5, 1),
            (5, 3, 3),
            (2, 3, 1),
            (1, 1, 2),
            (6, 0, 1),
        ];
        Graph::from_edges(8, edges).unwrap()
    }

    #[test]
    fn probabilities_sum_to_one() {
        let g = sample_graph();
        let b = Blockmodel::build(&g, vec![0, 0, 1, 2, 2, 3, 1, 3], 4).unwrap();
        for v in 0..8 {
            let ctx = VertexContext::compute(&g, b.assignment(), v);
            let r = b.community_of(v);
            let total: f64 = (0..4).filter(|&s| s != r).map(|s| move_probability(&b, &ctx, s)).sum();
            assert!((total - 1.0).abs() < 1e-12, "vertex {v}: {total}");
        }
    }

    #[test]
    fn empirical_frequencies_match() {
        let g = sample_graph();
        let b = Blockmodel::build(&g, vec![0, 0, 1, 2, 2, 3, 1, 3], 4).unwrap();
        let draws = 100_000;
        for v in [1usize, 2, 5, 7] {
            let ctx = VertexContext::compute(&g, b.assignment(), v);
            let mut rng = stream(11, &[v as u64]);
            let mut counts = [0usize; 4];
            for _ in 0..draws {
                counts[propose_move(&b, &ctx, &mut rng).unwrap()] += 1;
            }
            for (s, &count) in counts.iter().enumerate() {
                let p = if s == b.community_of(v) { 0.0 } else { move_probability(&b, &ctx, s) };
                let mean = p * draws as f64;
                let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
                let diff = (count as f64 - mean).abs();
                assert!(diff <= 3.0 * sigma.max(1e-9), "v={v} s={s} got {} want {mean:.1}", count);
            }
        }
    }

    #[test]
    fn reverse_probability_matches_recomputed_model() {
        let g = sample_graph();
        let b = Blockmodel::build(&g, vec![0, 0, 1, 2, 2, 3, 1, 3], 4).unwrap();
        for v in 0..8 {
            let ctx = VertexContext::compute(&g, b.assignment(), v);
            let r = b.community_of(v);
            for s in (0..4).filter(|&s| s != r) {
                let delta = b.move_delta(&ctx, s);
                let fast = reverse_move_probability(&b, &ctx, &delta);
                let mut after = b.clone();
                after.apply_move_delta(&delta);
                let ctx_after = VertexContext::compute(&g, after.assignment(), v);
                let slow = move_probability(&after, &ctx_after, r);
                assert!((fast - slow).abs() < 1e-14, "v={v} s={s}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn acceptance_rate_for_ln2() {
        let mut rng = stream(5, &[]);
        let n = 100_000;
        let beta = 1.0;
        let accepted = (0..n)
            .filter(|_| accept_move(std::f64::consts::LN_2, 0.5, 0.5, beta, &mut rng))
            .count();
        let rate = accepted as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.01, "{rate}");
    }

    #[test]
    fn improvements_always_accepted_and_nan_rejected() {
        let mut rng = stream(6, &[]);
        for _ in 0..1000 {
            assert!(accept_move(-1.0, 0.3, 0.3, 3.0, &mut rng));
        }
        assert!(!accept_move(f64::NAN, 0.3, 0.3, 3.0, &mut rng));
        assert!(!accept_move(f64::INFINITY, 0.3, 0.3, 3.0, &mut rng));
    }

    #[test]
    fn merge_proposals_avoid_self() {
        let g = sample_graph();
        let b = Blockmodel::build(&g, vec![0, 0, 1, 2, 2, 3, 1, 3], 4).unwrap();
        let mut rng = stream(9, &[]);
        for r in 0..4 {
            for _ in 0..200 {
                let s = propose_merge(&b, r, &mut rng).unwrap();
                assert!(s != r && s < 4);
            }
        }
        let one = Blockmodel::build(&g, vec![0; 8], 1).unwrap();
        assert_eq!(propose_merge(&one, 0, &mut rng), None);
    }
}
