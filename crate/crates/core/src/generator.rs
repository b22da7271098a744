//! Seeded degree-corrected planted-partition graph generator.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::stream;

/// Parameters of one synthetic graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub num_vertices: usize,
    pub num_communities: usize,
    pub truncate_min: bool,
    pub truncate_max: bool,
    pub duplicate_degree_sequence: bool,
    /// Degree `k` is drawn with weight `k^powerlaw_exponent`.
    pub powerlaw_exponent: f64,
    pub d_min: usize,
    pub d_max: usize,
    /// Expected intra-community edges per inter-community edge.
    pub intra_ratio: f64,
    pub dirichlet_alpha: f64,
    /// Untruncated maximum degree as a fraction of the vertex count.
    pub max_degree_fraction: f64,
    pub seed: u64,
}

pub const TRUNCATED_MIN_DEGREE: usize = 10;
pub const TRUNCATED_MAX_DEGREE: usize = 100;

impl Default for GeneratorParams {
    fn default() -> Self {
        let mut p = GeneratorParams {
            num_vertices: 1000,
            num_communities: 10,
            truncate_min: true,
            truncate_max: true,
            duplicate_degree_sequence: true,
            powerlaw_exponent: -2.5,
            d_min: 0,
            d_max: 0,
            intra_ratio: 2.0,
            dirichlet_alpha: 2.0,
            max_degree_fraction: 0.05,
            seed: 0,
        };
        p.reset_degree_bounds();
        p
    }
}

impl GeneratorParams {
    /// Derives `d_min`/`d_max` from the truncation flags.
    pub fn reset_degree_bounds(&mut self) {
        self.d_min = if self.truncate_min { TRUNCATED_MIN_DEGREE } else { 1 };
        self.d_max = if self.truncate_max {
            TRUNCATED_MAX_DEGREE
        } else {
            ((self.num_vertices as f64 * self.max_degree_fraction) as usize).max(2)
        };
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_communities < 1 {
            return bad("at least one community is required".into());
        }
        if self.num_communities >= self.num_vertices {
            return bad(format!(
                "{} communities need more than {} vertices",
                self.num_communities, self.num_vertices
            ));
        }
        if self.d_min < 1 || self.d_max < self.d_min {
            return bad(format!("degree bounds [{}, {}] are invalid", self.d_min, self.d_max));
        }
        if !(self.intra_ratio > 0.0 && self.intra_ratio.is_finite()) {
            return bad("intra_ratio must be positive".into());
        }
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return bad("dirichlet_alpha must be positive".into());
        }
        if !self.powerlaw_exponent.is_finite() {
            return bad("powerlaw_exponent must be finite".into());
        }
        Ok(())
    }

    /// Mean of the degree distribution.
    pub fn mean_degree(&self) -> f64 {
        mean_degree(self.powerlaw_exponent, self.d_min, self.d_max)
    }

    /// Expected number of edges.
    pub fn expected_edges(&self) -> f64 {
        let per_vertex = if self.duplicate_degree_sequence {
            self.mean_degree()
        } else {
            self.mean_degree() / 2.0
        };
        per_vertex * self.num_vertices as f64
    }

    /// Sets the exponent so that the expected edge count is `edges`,
    /// clamped to the range the degree bounds allow.
    pub fn calibrate_exponent(&mut self, edges: f64) {
        let per_vertex = edges / self.num_vertices as f64;
        let target = if self.duplicate_degree_sequence { per_vertex } else { 2.0 * per_vertex };
        // mean degree decreases as the exponent decreases
        let (mut lo, mut hi) = (-12.0f64, 12.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if mean_degree(m, self.d_min, self.d_max) < target {
                lo = m;
            } else {
                hi = m;
            }
        }
        self.powerlaw_exponent = 0.5 * (lo + hi);
    }

    /// `key=value` lines, one per field.
    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "num_vertices={}", self.num_vertices);
        let _ = writeln!(s, "num_communities={}", self.num_communities);
        let _ = writeln!(s, "truncate_min={}", self.truncate_min);
        let _ = writeln!(s, "truncate_max={}", self.truncate_max);
        let _ = writeln!(s, "duplicate_degree_sequence={}", self.duplicate_degree_sequence);
        let _ = writeln!(s, "powerlaw_exponent={}", self.powerlaw_exponent);
        let _ = writeln!(s, "d_min={}", self.d_min);
        let _ = writeln!(s, "d_max={}", self.d_max);
        let _ = writeln!(s, "intra_ratio={}", self.intra_ratio);
        let _ = writeln!(s, "dirichlet_alpha={}", self.dirichlet_alpha);
        let _ = writeln!(s, "max_degree_fraction={}", self.max_degree_fraction);
        let _ = writeln!(s, "seed={}", self.seed);
        s
    }

    /// Applies `key=value` overrides. Blank lines and `#` comments are
    /// skipped. Changing a truncation flag or the vertex count without also
    /// giving explicit bounds re-derives the degree bounds.
    pub fn apply_manifest(&mut self, text: &str) -> Result<()> {
        let mut explicit_bounds = false;
        let mut shape_changed = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
                v.parse()
                    .map_err(|_| Error::parse(line, format!("invalid value {v:?} for {key}")))
            }
            fn flag(line: usize, key: &str, v: &str) -> Result<bool> {
                match v {
                    "true" | "True" | "1" => Ok(true),
                    "false" | "False" | "0" => Ok(false),
                    _ => Err(Error::parse(line, format!("invalid flag {v:?} for {key}"))),
                }
            }
            match key {
                "num_vertices" => {
                    self.num_vertices = num(line_no, key, value)?;
                    shape_changed = true;
                }
                "num_communities" => self.num_communities = num(line_no, key, value)?,
                "truncate_min" => {
                    self.truncate_min = flag(line_no, key, value)?;
                    shape_changed = true;
                }
                "truncate_max" => {
                    self.truncate_max = flag(line_no, key, value)?;
                    shape_changed = true;
                }
                "duplicate_degree_sequence" => self.duplicate_degree_sequence = flag(line_no, key, value)?,
                "powerlaw_exponent" => self.powerlaw_exponent = num(line_no, key, value)?,
                "d_min" => {
                    self.d_min = num(line_no, key, value)?;
                    explicit_bounds = true;
                }
                "d_max" => {
                    self.d_max = num(line_no, key, value)?;
                    explicit_bounds = true;
                }
                "intra_ratio" => self.intra_ratio = num(line_no, key, value)?,
                "dirichlet_alpha" => self.dirichlet_alpha = num(line_no, key, value)?,
                "max_degree_fraction" => {
                    self.max_degree_fraction = num(line_no, key, value)?;
                    shape_changed = true;
                }
                "seed" => self.seed = num(line_no, key, value)?,
                _ => return Err(Error::parse(line_no, format!("unknown key {key:?}"))),
            }
        }
        if shape_changed && !explicit_bounds {
            self.reset_degree_bounds();
        }
        Ok(())
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut p = Self::default();
        p.apply_manifest(text)?;
        p.validate()?;
        Ok(p)
    }
}

fn mean_degree(exponent: f64, d_min: usize, d_max: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for k in d_min..=d_max {
        let w = (k as f64).powf(exponent);
        num += k as f64 * w;
        den += w;
    }
    num / den
}

/// One row of the parameter-search table: flags, community count, vertex
/// and edge counts at full scale.
struct Row {
    name: &'static str,
    flags: (bool, bool, bool),
    communities: usize,
    vertices: usize,
    edges: u64,
}

const fn row(name: &'static str, flags: (bool, bool, bool), communities: usize, vertices: usize, edges: u64) -> Row {
    Row {
        name,
        flags,
        communities,
        vertices,
        edges,
    }
}

const T: bool = true;
const F: bool = false;

const ROWS: &[Row] = &[
    row("TTT33", (T, T, T), 33, 22599, 899283),
    row("TTT150", (T, T, T), 150, 22599, 826861),
    row("TTF33", (T, T, F), 33, 22599, 452232),
    row("TTF150", (T, T, F), 150, 22599, 421317),
    row("TFT33", (T, F, T), 33, 22599, 1059970),
    row("TFT150", (T, F, T), 150, 22599, 912644),
    row("TFF33", (T, F, F), 33, 22599, 540410),
    row("TFF150", (T, F, F), 150, 22598, 471071),
    row("FTT33", (F, T, T), 33, 21896, 79683),
    row("FTT150", (F, T, T), 150, 22036, 78226),
    row("FTF33", (F, T, F), 33, 19220, 39719),
    row("FTF150", (F, T, F), 150, 19221, 38408),
    row("FFT33", (F, F, T), 33, 22157, 83939),
    row("FFT150", (F, F, T), 150, 21958, 81298),
    row("FFF33", (F, F, F), 33, 19516, 41378),
    row("FFF150", (F, F, F), 150, 19358, 40835),
    row("1M", (T, F, F), 1075, 1051218, 11056834),
    row("2M", (T, F, F), 1521, 2103554, 23987218),
    row("4M", (T, F, F), 2151, 4221264, 53175026),
];

/// Planted-partition presets in the style of the streaming partition
/// challenge graphs: name, vertices, communities, intra ratio, Dirichlet
/// alpha. Degrees are truncated and duplicated.
const CHALLENGE: &[(&str, usize, usize, f64, f64)] = &[
    ("easy-20k", 20000, 32, 6.0, 20.0),
    ("hard-20k", 20000, 32, 2.0, 2.0),
    ("easy-50k", 50000, 44, 6.0, 20.0),
    ("hard-50k", 50000, 44, 2.0, 2.0),
    ("easy-200k", 200000, 71, 6.0, 20.0),
    ("hard-200k", 200000, 71, 2.0, 2.0),
];

/// Desk-scale presets keep the community count and divide the vertex count by this.
pub const TINY_DIVISOR: usize = 10;

/// Every preset name, full-scale and desk-scale.
pub fn preset_names() -> Vec<String> {
    let full: Vec<&str> = ROWS.iter().map(|r| r.name).chain(CHALLENGE.iter().map(|c| c.0)).collect();
    full.iter()
        .map(|n| n.to_string())
        .chain(full.iter().map(|n| format!("tiny-{n}")))
        .collect()
}

/// Recorded full-scale edge count of a parameter-search or scaling preset.
pub fn recorded_edges(name: &str) -> Option<u64> {
    ROWS.iter().find(|r| r.name == name).map(|r| r.edges)
}

fn scaled(v: usize, tiny: bool) -> usize {
    if tiny {
        ((v as f64) / TINY_DIVISOR as f64).round() as usize
    } else {
        v
    }
}

/// Looks up a named preset. `tiny-` prefixed names are desk-scale versions
/// with the vertex count divided by ten and the same mean degree.
pub fn preset(name: &str) -> Result<GeneratorParams> {
    let (base, tiny) = match name.strip_prefix("tiny-") {
        Some(b) => (b, true),
        None => (name, false),
    };
    if let Some(r) = ROWS.iter().find(|r| r.name == base) {
        let (tmin, tmax, dup) = r.flags;
        let mut p = GeneratorParams {
            num_vertices: scaled(r.vertices, tiny),
            num_communities: r.communities,
            truncate_min: tmin,
            truncate_max: tmax,
            duplicate_degree_sequence: dup,
            ..GeneratorParams::default()
        };
        p.reset_degree_bounds();
        let edges = r.edges as f64 * p.num_vertices as f64 / r.vertices as f64;
        p.calibrate_exponent(edges);
        return Ok(p);
    }
    if let Some(&(_, v, c, ratio, alpha)) = CHALLENGE.iter().find(|c| c.0 == base) {
        let mut p = GeneratorParams {
            num_vertices: scaled(v, tiny),
            num_communities: c,
            intra_ratio: ratio,
            dirichlet_alpha: alpha,
            ..GeneratorParams::default()
        };
        p.reset_degree_bounds();
        return Ok(p);
    }
    Err(Error::Config(format!("unknown preset {name:?}")))
}

/// Splits `total` into `weights.len()` positive parts proportional to the
/// weights, using largest remainders.
fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let k = weights.len();
    let spare = total - k;
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * spare as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| 1 + x.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total - assigned) {
        sizes[i] += 1;
    }
    sizes
}

/// Fenwick tree over non-negative weights supporting draws by prefix sum.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(weights: &[u64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            tree[i + 1] += w;
            let j = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if j <= n {
                tree[j] += tree[i + 1];
            }
        }
        Fenwick { tree }
    }

    /// Sum of weights at positions `< i`.
    fn prefix(&self, mut i: usize) -> u64 {
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    fn decrement(&mut self, i: usize) {
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] -= 1;
            j += j & j.wrapping_neg();
        }
    }

    /// Smallest position whose inclusive prefix sum exceeds `x`.
    fn find(&self, mut x: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= x {
                pos = next;
                x -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Generates a graph and its planted community assignment.
pub fn generate(params: &GeneratorParams) -> Result<(Graph, Vec<usize>)> {
    params.validate()?;
    let v = params.num_vertices;
    let c = params.num_communities;
    let mut rng = stream(params.seed, &[0x6765_6e65]);

    let gamma = Gamma::new(params.dirichlet_alpha, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let weights: Vec<f64> = (0..c).map(|_| gamma.sample(&mut rng).max(f64::MIN_POSITIVE)).collect();
    let sizes = apportion(&weights, v);

    // vertices of each community occupy a contiguous slot range; slots are
    // mapped to shuffled vertex ids
    let mut vertex_of_slot: Vec<usize> = (0..v).collect();
    vertex_of_slot.shuffle(&mut rng);
    let mut starts = Vec::with_capacity(c + 1);
    starts.push(0);
    for &s in &sizes {
        starts.push(starts.last().unwrap() + s);
    }
    let mut community_of_slot = vec![0usize; v];
    for k in 0..c {
        community_of_slot[starts[k]..starts[k + 1]].fill(k);
    }
    let mut truth = vec![0usize; v];
    for (slot, &vertex) in vertex_of_slot.iter().enumerate() {
        truth[vertex] = community_of_slot[slot];
    }

    let ks: Vec<f64> = (params.d_min..=params.d_max)
        .map(|k| (k as f64).powf(params.powerlaw_exponent))
        .collect();
    let mut cdf = Vec::with_capacity(ks.len());
    let mut acc = 0.0;
    for w in &ks {
        acc += w;
        cdf.push(acc);
    }
    let mut out_deg = vec![0u64; v];
    let mut in_deg = vec![0u64; v];
    for slot in 0..v {
        let x = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&p| p <= x).min(cdf.len() - 1);
        let d = (params.d_min + idx) as u64;
        if params.duplicate_degree_sequence {
            out_deg[slot] = d;
            in_deg[slot] = d;
        } else {
            let out = (0..d).filter(|_| rng.random_bool(0.5)).count() as u64;
            out_deg[slot] = out;
            in_deg[slot] = d - out;
        }
    }

    let mut size_cdf = Vec::with_capacity(c);
    let mut acc = 0u64;
    for &s in &sizes {
        acc += s as u64;
        size_cdf.push(acc);
    }
    let total_size = acc;
    let p_intra = params.intra_ratio / (params.intra_ratio + 1.0);
    let mut remaining = Fenwick::new(&in_deg);
    let community_supply: Vec<u64> = (0..c).map(|k| in_deg[starts[k]..starts[k + 1]].iter().sum()).collect();
    let mut supply = Fenwick::new(&community_supply);
    let mut supply_left = community_supply.clone();

    let mut stubs: Vec<u32> = Vec::with_capacity(out_deg.iter().sum::<u64>() as usize);
    for (slot, &d) in out_deg.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(slot as u32, d as usize));
    }
    stubs.shuffle(&mut rng);

    let mut edges = Vec::with_capacity(stubs.len());
    for &src in &stubs {
        let src = src as usize;
        let own = community_of_slot[src];
        let others = supply.prefix(c) - supply_left[own];
        let wants_intra = c == 1 || rng.random::<f64>() < p_intra;
        // a side whose in-stubs are used up hands the edge to the other side
        let intra = if wants_intra { supply_left[own] > 0 || others == 0 } else { others == 0 && supply_left[own] > 0 };
        let target_c = if intra {
            own
        } else if others > 0 {
            let mut x = rng.random_range(0..others);
            if x >= supply.prefix(own) {
                x += supply_left[own];
            }
            supply.find(x)
        } else {
            loop {
                let x = rng.random_range(0..total_size);
                let k = size_cdf.partition_point(|&p| p <= x);
                if k != own {
                    break k;
                }
            }
        };
        let (lo, hi) = (starts[target_c], starts[target_c + 1]);
        let base = remaining.prefix(lo);
        let left = remaining.prefix(hi) - base;
        let dst = if left > 0 {
            let slot = remaining.find(base + rng.random_range(0..left));
            remaining.decrement(slot);
            supply.decrement(target_c);
            supply_left[target_c] -= 1;
            slot
        } else {
            let original: u64 = in_deg[lo..hi].iter().sum();
            if original > 0 {
                let mut x = rng.random_range(0..original);
                let mut pick = lo;
                for (i, &d) in in_deg[lo..hi].iter().enumerate() {
                    if x < d {
                        pick = lo + i;
                        break;
                    }
                    x -= d;
                }
                pick
            } else {
                rng.random_range(lo..hi)
            }
        };
        edges.push((vertex_of_slot[src], vertex_of_slot[dst], 1u64));
    }
    let graph = Graph::from_edges(v, edges)?;
    Ok((graph, truth))
}

/// Writes `graph.tsv`, `truth.tsv` and `params.txt` into `dir`.
pub fn write_outputs(dir: &Path, params: &GeneratorParams, graph: &Graph, truth: &[usize]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut g = std::io::BufWriter::new(std::fs::File::create(dir.join("graph.tsv"))?);
    graph.write_edge_list(&mut g, 0)?;
    g.flush()?;
    let mut t = std::io::BufWriter::new(std::fs::File::create(dir.join("truth.tsv"))?);
    crate::graph::write_assignment(truth, &mut t, 0)?;
    t.flush()?;
    std::fs::write(dir.join("params.txt"), params.to_manifest())?;
    Ok(())
}
