//! Partition-quality measures.

use std::collections::HashMap;

use crate::blockmodel::null_description_length;
use crate::error::{Error, Result};

fn entropy<I: IntoIterator<Item = u64>>(counts: I, n: f64) -> f64 {
    let mut counts: Vec<u64> = counts.into_iter().collect();
    counts.sort_unstable();
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, `2 I(A;B) / (H(A) + H(B))`.
///
/// Two constant partitions score 1; a constant partition against a
/// non-constant one scores 0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "partitions have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Input("partitions are empty".into()));
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut ca: HashMap<usize, u64> = HashMap::new();
    let mut cb: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let ha = entropy(ca.values().copied(), n);
    let hb = entropy(cb.values().copied(), n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    // sort the joint cells so the floating-point sum does not depend on
    // hash iteration order; keeps nmi(a, b) == nmi(b, a) bit for bit
    let mut cells: Vec<(u64, u64, u64)> = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let (px, py) = (ca[&x], cb[&y]);
            (c, px.min(py), px.max(py))
        })
        .collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .iter()
        .map(|&(c, p, q)| {
            let pxy = c as f64 / n;
            pxy * (c as f64 * n / (p as f64 * q as f64)).ln()
        })
        .sum();
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// Description length relative to the one-community model.
pub fn normalized_dl(dl: f64, num_vertices: usize, num_edges: u64) -> Result<f64> {
    if num_edges == 0 {
        return Err(Error::Input("normalized description length is undefined without edges".into()));
    }
    Ok(dl / null_description_length(num_vertices, num_edges))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or fewer than two points are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockmodel::Blockmodel;
    use crate::graph::Graph;
    use proptest::prelude::*;

    #[test]
    fn identical_up_to_relabeling() {
        assert_eq!(nmi(&[0, 0, 1, 2], &[5, 5, 9, 1]).unwrap(), 1.0);
    }

    #[test]
    fn constant_vs_balanced() {
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[3, 3], &[1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_contingency() {
        // a = [0,0,1,1], b = [0,1,1,1]; cells: (0,0)=1 (0,1)=1 (1,1)=2
        let ha = 2f64.ln();
        let hb = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        let mi = 0.25 * (0.25f64 / (0.5 * 0.25)).ln()
            + 0.25 * (0.25f64 / (0.5 * 0.75)).ln()
            + 0.5 * (0.5f64 / (0.5 * 0.75)).ln();
        let expected = 2.0 * mi / (ha + hb);
        let got = nmi(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn length_mismatch() {
        assert!(nmi(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn normalized_dl_values() {
        let null = null_description_length(10, 20);
        assert_eq!(normalized_dl(null, 10, 20).unwrap(), 1.0);
        assert!(normalized_dl(null * 0.5, 10, 20).unwrap() < 1.0);
        assert!(normalized_dl(1.0, 10, 0).is_err());
    }

    #[test]
    fn normalized_dl_four_cycle() {
        let g = Graph::from_edges(4, (0..4).map(|i| (i, (i + 1) % 4, 1))).unwrap();
        let b = Blockmodel::build(&g, vec![0, 0, 1, 1], 2).unwrap();
        // closed form: DL = 4 h(1) + 4 ln 2 - 4 ln(1/4); null = 4 h(1/4) + 4 ln 4
        let h = |x: f64| (1.0 + x) * (1.0 + x).ln() - x * x.ln();
        let dl = 4.0 * h(1.0) + 4.0 * 2f64.ln() - 4.0 * 0.25f64.ln();
        let null = 4.0 * h(0.25) + 4.0 * 4f64.ln();
        let got = normalized_dl(b.description_length(), 4, 4).unwrap();
        assert!((got - dl / null).abs() < 1e-12);
    }

    #[test]
    fn spearman_basic() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[3.0, 2.0]), None);
        assert!((median(&[3.0, 1.0, 2.0, 10.0]) - 2.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn nmi_symmetric_and_relabel_invariant(
            pairs in prop::collection::vec((0usize..5, 0usize..4), 1..60),
            shift in 1usize..7,
        ) {
            let a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let ab = nmi(&a, &b).unwrap();
            prop_assert_eq!(ab, nmi(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            let relabeled: Vec<usize> = a.iter().map(|&x| (x + shift) * 3).collect();
            prop_assert!((nmi(&relabeled, &b).unwrap() - ab).abs() < 1e-12);
        }

        #[test]
        fn normalized_dl_monotone(dl1 in 0.0f64..1e6, step in 0.0f64..1e3, v in 1usize..1000, e in 1u64..5000) {
            prop_assert!(normalized_dl(dl1, v, e).unwrap() <= normalized_dl(dl1 + step, v, e).unwrap());
        }
    }
}
