//! Directed multigraph storage, edge-list/truth ingestion and the round-robin
//! data distribution used by divide-and-conquer partitioning.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// A directed multigraph with integer edge multiplicities.
///
/// Adjacency is stored in compressed form for both directions; neighbor
/// lists are sorted by neighbor id and contain each neighbor once, carrying
/// the accumulated multiplicity. A self-loop `(v, v)` appears once in the
/// out-list and once in the in-list of `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    out_offsets: Vec<usize>,
    out_adj: Vec<(usize, u64)>,
    in_offsets: Vec<usize>,
    in_adj: Vec<(usize, u64)>,
    out_degree: Vec<u64>,
    in_degree: Vec<u64>,
    num_edges: u64,
}

impl Graph {
    /// Builds a graph from `(source, target, multiplicity)` triples.
    /// Duplicate pairs accumulate; zero multiplicities are dropped.
    pub fn from_edges<I>(num_vertices: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut list: Vec<(usize, usize, u64)> = Vec::new();
        for (u, w, m) in edges {
            if u >= num_vertices || w >= num_vertices {
                return Err(Error::Input(format!(
                    "edge ({u}, {w}) out of range for {num_vertices} vertices"
                )));
            }
            if m > 0 {
                list.push((u, w, m));
            }
        }
        list.sort_unstable_by_key(|&(u, w, _)| (u, w));
        let mut merged: Vec<(usize, usize, u64)> = Vec::with_capacity(list.len());
        for (u, w, m) in list {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == w => last.2 += m,
                _ => merged.push((u, w, m)),
            }
        }
        Ok(Self::from_sorted_unique(num_vertices, &merged))
    }

    fn from_sorted_unique(num_vertices: usize, edges: &[(usize, usize, u64)]) -> Graph {
        let mut out_degree = vec![0u64; num_vertices];
        let mut in_degree = vec![0u64; num_vertices];
        let mut out_count = vec![0usize; num_vertices + 1];
        let mut in_count = vec![0usize; num_vertices + 1];
        let mut num_edges = 0u64;
        for &(u, w, m) in edges {
            out_degree[u] += m;
            in_degree[w] += m;
            out_count[u + 1] += 1;
            in_count[w + 1] += 1;
            num_edges += m;
        }
        for i in 0..num_vertices {
            out_count[i + 1] += out_count[i];
            in_count[i + 1] += in_count[i];
        }
        let out_offsets = out_count.clone();
        let in_offsets = in_count.clone();
        let mut out_adj = vec![(0usize, 0u64); edges.len()];
        let mut in_adj = vec![(0usize, 0u64); edges.len()];
        let mut out_fill = out_count;
        let mut in_fill = in_count;
        // edges are sorted by (u, w): out lists come out sorted by target and
        // in lists sorted by source because sources are visited in order.
        for &(u, w, m) in edges {
            out_adj[out_fill[u]] = (w, m);
            out_fill[u] += 1;
            in_adj[in_fill[w]] = (u, m);
            in_fill[w] += 1;
        }
        Graph {
            out_offsets,
            out_adj,
            in_offsets,
            in_adj,
            out_degree,
            in_degree,
            num_edges,
        }
    }

    /// Graph with no edges.
    pub fn empty(num_vertices: usize) -> Graph {
        Self::from_sorted_unique(num_vertices, &[])
    }

    pub fn num_vertices(&self) -> usize {
        self.out_degree.len()
    }

    /// Total edge multiplicity.
    pub fn num_edges(&self) -> u64 {
        self.num_edges
    }

    #[inline]
    pub fn out_neighbors(&self, v: usize) -> &[(usize, u64)] {
        &self.out_adj[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, v: usize) -> &[(usize, u64)] {
        &self.in_adj[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    #[inline]
    pub fn out_degree(&self, v: usize) -> u64 {
        self.out_degree[v]
    }

    #[inline]
    pub fn in_degree(&self, v: usize) -> u64 {
        self.in_degree[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> u64 {
        self.out_degree[v] + self.in_degree[v]
    }

    /// Per-vertex total degrees.
    pub fn degrees(&self) -> Vec<u64> {
        (0..self.num_vertices()).map(|v| self.degree(v)).collect()
    }

    /// Iterates `(source, target, multiplicity)` in canonical `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.num_vertices())
            .flat_map(move |u| self.out_neighbors(u).iter().map(move |&(w, m)| (u, w, m)))
    }

    /// Returns a copy padded with degree-0 vertices up to `num_vertices`.
    pub fn padded_to(&self, num_vertices: usize) -> Graph {
        if num_vertices <= self.num_vertices() {
            return self.clone();
        }
        let edges: Vec<_> = self.edges().collect();
        Self::from_sorted_unique(num_vertices, &edges)
    }

    /// Induced subgraph on `vertices` (local id = position in the slice).
    pub fn induced(&self, vertices: &[usize]) -> Result<Graph> {
        let mut local = vec![usize::MAX; self.num_vertices()];
        for (i, &v) in vertices.iter().enumerate() {
            if v >= self.num_vertices() {
                return Err(Error::Input(format!("vertex {v} out of range")));
            }
            if local[v] != usize::MAX {
                return Err(Error::Input(format!("vertex {v} listed twice")));
            }
            local[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &(w, m) in self.out_neighbors(v) {
                let j = local[w];
                if j != usize::MAX {
                    edges.push((i, j, m));
                }
            }
        }
        if vertices.windows(2).all(|p| p[0] < p[1]) {
            // already sorted and unique
            Ok(Self::from_sorted_unique(vertices.len(), &edges))
        } else {
            Self::from_edges(vertices.len(), edges)
        }
    }

    /// Writes the canonical edge list: `src<TAB>dst`, with a third
    /// multiplicity column only where it exceeds one.
    pub fn write_edge_list<W: Write>(&self, mut out: W, base_index: usize) -> Result<()> {
        for (u, w, m) in self.edges() {
            if m == 1 {
                writeln!(out, "{}\t{}", u + base_index, w + base_index)?;
            } else {
                writeln!(out, "{}\t{}\t{}", u + base_index, w + base_index, m)?;
            }
        }
        Ok(())
    }
}

fn parse_id(token: &str, line: usize, base_index: usize) -> Result<usize> {
    let raw: i64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("`{token}` is not an integer vertex id")))?;
    let shifted = raw.saturating_sub(base_index as i64);
    if shifted < 0 {
        return Err(Error::Input(format!(
            "line {line}: vertex id {raw} is negative after applying base index {base_index}"
        )));
    }
    Ok(shifted as usize)
}

fn parse_weight(token: &str, line: usize) -> Result<u64> {
    if let Ok(w) = token.parse::<i64>() {
        if w < 0 {
            return Err(Error::Input(format!("line {line}: negative edge weight {w}")));
        }
        if w > u32::MAX as i64 {
            return Err(Error::Input(format!("line {line}: weight {w} too large")));
        }
        return Ok(w as u64);
    }
    let w: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("`{token}` is not a numeric weight")))?;
    if !w.is_finite() {
        return Err(Error::parse(line, format!("non-finite weight `{token}`")));
    }
    if w < 0.0 {
        return Err(Error::Input(format!("line {line}: negative edge weight {w}")));
    }
    if w > u32::MAX as f64 {
        return Err(Error::Input(format!("line {line}: weight {w} too large")));
    }
    Ok(w.round() as u64)
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#') || t.starts_with('%')
}

/// Largest vertex id accepted by [`load_edge_list`] and [`load_truth`].
pub const MAX_VERTEX_ID: usize = 1 << 28;

/// Reads a whitespace-separated edge list.
///
/// Each line is `src dst` or `src dst weight`; weights are rounded to an
/// integer multiplicity. Blank lines and lines starting with `#` or `%` are
/// ignored. The vertex count is one more than the largest (re-based) id.
pub fn load_edge_list<R: BufRead>(input: R, base_index: usize) -> Result<Graph> {
    load_edge_list_bounded(input, base_index, MAX_VERTEX_ID)
}

/// [`load_edge_list`] with an explicit cap on vertex ids.
pub fn load_edge_list_bounded<R: BufRead>(input: R, base_index: usize, max_id: usize) -> Result<Graph> {
    let limit = max_id;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 2 or 3 fields, found {}", fields.len()),
            ));
        }
        let u = parse_id(fields[0], lineno, base_index)?;
        let w = parse_id(fields[1], lineno, base_index)?;
        if u > limit || w > limit {
            return Err(Error::Input(format!(
                "line {lineno}: vertex id exceeds supported maximum {limit}"
            )));
        }
        let m = match fields.get(2) {
            Some(tok) => parse_weight(tok, lineno)?,
            None => 1,
        };
        max_id = Some(max_id.map_or(u.max(w), |x| x.max(u).max(w)));
        edges.push((u, w, m));
    }
    let num_vertices = max_id.map_or(0, |x| x + 1);
    Graph::from_edges(num_vertices, edges)
}

/// Reads a `vertex community` truth file. Every vertex in `0..num_vertices`
/// must appear exactly once; vertices beyond `num_vertices` extend the
/// returned assignment.
pub fn load_truth<R: BufRead>(input: R, base_index: usize, num_vertices: usize) -> Result<Vec<usize>> {
    load_truth_bounded(input, base_index, num_vertices, MAX_VERTEX_ID)
}

/// [`load_truth`] with an explicit cap on vertex ids.
pub fn load_truth_bounded<R: BufRead>(
    input: R,
    base_index: usize,
    num_vertices: usize,
    max_id: usize,
) -> Result<Vec<usize>> {
    let mut labels: Vec<Option<usize>> = vec![None; num_vertices];
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                lineno,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let v = parse_id(fields[0], lineno, base_index)?;
        if v > max_id {
            return Err(Error::Input(format!("line {lineno}: vertex id too large")));
        }
        let c: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("`{}` is not a community id", fields[1])))?;
        if v >= labels.len() {
            labels.resize(v + 1, None);
        }
        if labels[v].replace(c).is_some() {
            return Err(Error::Input(format!("line {lineno}: vertex {v} listed twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(v, c)| c.ok_or_else(|| Error::Input(format!("vertex {v} missing from truth file"))))
        .collect()
}

/// Writes `vertex<TAB>community` lines.
pub fn write_assignment<W: Write>(assignment: &[usize], mut out: W, base_index: usize) -> Result<()> {
    for (v, &c) in assignment.iter().enumerate() {
        writeln!(out, "{}\t{}", v + base_index, c)?;
    }
    Ok(())
}

/// Relabels communities densely in order of increasing original label.
pub fn dense_labels(assignment: &[usize]) -> Vec<usize> {
    let mut labels: Vec<usize> = assignment.to_vec();
    labels.sort_unstable();
    labels.dedup();
    assignment
        .iter()
        .map(|c| labels.binary_search(c).expect("label present"))
        .collect()
}

/// One rank's share of the graph after data distribution.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub owner_rank: usize,
    /// Local id → global id, strictly increasing.
    pub vertex_map: Vec<usize>,
    pub graph: Graph,
}

/// Assigns vertex `v` to rank `v mod num_ranks` and keeps only the edges
/// whose endpoints share an owner.
pub fn round_robin_split(g: &Graph, num_ranks: usize) -> Result<Vec<Subgraph>> {
    if num_ranks == 0 {
        return Err(Error::Config("rank count must be at least 1".into()));
    }
    if num_ranks > g.num_vertices() {
        return Err(Error::Config(format!(
            "{num_ranks} ranks exceed {} vertices; empty ranks are not allowed",
            g.num_vertices()
        )));
    }
    (0..num_ranks)
        .map(|r| {
            let vertex_map: Vec<usize> = (r..g.num_vertices()).step_by(num_ranks).collect();
            let graph = g.induced(&vertex_map)?;
            Ok(Subgraph {
                owner_rank: r,
                vertex_map,
                graph,
            })
        })
        .collect()
}

/// Fraction of vertices left with no incident edge inside their subgraph.
pub fn island_fraction(subgraphs: &[Subgraph]) -> f64 {
    let total: usize = subgraphs.iter().map(|s| s.graph.num_vertices()).sum();
    if total == 0 {
        return 0.0;
    }
    let islands: usize = subgraphs
        .iter()
        .map(|s| (0..s.graph.num_vertices()).filter(|&v| s.graph.degree(v) == 0).count())
        .sum();
    islands as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Graph> {
        load_edge_list(text.as_bytes(), 0)
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n, 1))).unwrap()
    }

    #[test]
    fn two_cycle() {
        let g = parse("0 1\n1 0\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.degrees(), vec![2, 2]);
    }

    #[test]
    fn duplicates_accumulate() {
        let g = parse("0\t1\n0\t1\n").unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.out_neighbors(0), &[(1, 2)]);
        assert_eq!(g.in_neighbors(1), &[(0, 2)]);
    }

    #[test]
    fn unmentioned_ids_become_isolated() {
        // hand count: ids 0,1,3,5,7 appear; 2,4,6 never do
        let text = "0 1\n1 3\n3 0\n5 7\n7 7\n";
        let g = parse(text).unwrap();
        assert_eq!(g.num_vertices(), 8);
        assert_eq!(g.num_edges(), 5);
        assert_eq!(g.degrees(), vec![2, 2, 0, 2, 0, 1, 0, 3]);
    }

    #[test]
    fn weights_and_base_index() {
        let g = load_edge_list("1 2 3\n2 1 1.6\n".as_bytes(), 1).unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.out_neighbors(0), &[(1, 3)]);
        assert_eq!(g.out_neighbors(1), &[(0, 2)]);
        assert_eq!(g.num_edges(), 5);
    }

    #[test]
    fn self_loops_count_in_both_directions() {
        let g = parse("0 0\n0 1\n").unwrap();
        assert_eq!(g.out_degree(0), 2);
        assert_eq!(g.in_degree(0), 1);
        assert_eq!(g.degree(0), 3);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("0 1\n\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0 1 2 3\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn negative_ids_rejected() {
        assert!(matches!(parse("0 -1\n"), Err(Error::Input(_))));
        assert!(matches!(load_edge_list("0 1\n".as_bytes(), 1), Err(Error::Input(_))));
        assert!(matches!(parse("0 1 -2\n"), Err(Error::Input(_))));
    }

    #[test]
    fn canonical_round_trip() {
        let text = "0\t1\n0\t2\t4\n1\t1\n2\t0\n";
        let g = parse(text).unwrap();
        let mut out = Vec::new();
        g.write_edge_list(&mut out, 0).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn truth_file() {
        let t = load_truth("0 5\n2 7\n1 5\n".as_bytes(), 0, 3).unwrap();
        assert_eq!(t, vec![5, 5, 7]);
        assert!(load_truth("0 5\n".as_bytes(), 0, 2).is_err());
        assert!(load_truth("0 5\n0 1\n".as_bytes(), 0, 1).is_err());
        assert_eq!(load_truth("1 3\n2 4\n".as_bytes(), 1, 2).unwrap(), vec![3, 4]);
    }

    #[test]
    fn split_identity() {
        let g = parse("0 1\n1 2\n2 0\n2 2\n").unwrap();
        let parts = round_robin_split(&g, 1).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].graph, g);
        assert_eq!(parts[0].vertex_map, vec![0, 1, 2]);
        assert_eq!(island_fraction(&parts), 0.0);
    }

    #[test]
    fn split_four_cycle_cuts_everything() {
        let parts = round_robin_split(&cycle(4), 2).unwrap();
        for p in &parts {
            assert_eq!(p.graph.num_vertices(), 2);
            assert_eq!(p.graph.num_edges(), 0);
        }
        assert_eq!(parts[1].vertex_map, vec![1, 3]);
        assert_eq!(island_fraction(&parts), 1.0);
    }

    #[test]
    fn split_path() {
        let path = Graph::from_edges(6, (0..5).map(|i| (i, i + 1, 1))).unwrap();
        let parts = round_robin_split(&path, 2).unwrap();
        assert!(parts.iter().all(|p| p.graph.num_edges() == 0));
        assert_eq!(island_fraction(&parts), 1.0);
    }

    #[test]
    fn split_keeps_induced_edges() {
        // 0->2 and 1->3 stay local with 2 ranks; 0->1 crosses
        let g = parse("0 2\n1 3\n0 1\n").unwrap();
        let parts = round_robin_split(&g, 2).unwrap();
        assert_eq!(parts[0].graph.out_neighbors(0), &[(1, 1)]);
        assert_eq!(parts[1].graph.out_neighbors(0), &[(1, 1)]);
        assert_eq!(parts[0].graph.num_edges() + parts[1].graph.num_edges(), 2);
    }

    #[test]
    fn split_rejects_too_many_ranks() {
        assert!(round_robin_split(&cycle(3), 4).is_err());
        assert!(round_robin_split(&cycle(3), 0).is_err());
    }

    #[test]
    fn dense_relabel() {
        assert_eq!(dense_labels(&[7, 3, 7, 9]), vec![1, 0, 1, 2]);
    }
}
