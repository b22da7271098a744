//! Benchmark sweeps over presets, algorithms, rank counts and seeds.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::comm::run_inprocess;
use crate::dcsbp::dcsbp_run;
use crate::edist::edist_run;
use crate::generator::{generate, preset};
use crate::graph::Graph;
use crate::inference::{sbp, SbpConfig, SbpResult};
use crate::metrics::{nmi, normalized_dl};
use crate::{Error, Result};

/// Column names of the sweep CSV, in order.
pub const CSV_HEADER: &str = "preset,algo,ranks,seed,nmi,dl_norm,island_fraction,seconds,final_C,status";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Serial,
    Dcsbp,
    Edist,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Serial => "serial",
            Algo::Dcsbp => "dcsbp",
            Algo::Edist => "edist",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "serial" => Ok(Algo::Serial),
            "dcsbp" => Ok(Algo::Dcsbp),
            "edist" => Ok(Algo::Edist),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Checks an algorithm and rank count before any work starts.
pub fn check_combination(algo: Algo, ranks: usize, num_vertices: usize) -> Result<()> {
    if ranks == 0 {
        return Err(Error::Config("rank count must be at least 1".into()));
    }
    match algo {
        Algo::Serial if ranks != 1 => Err(Error::Config("serial runs use exactly one rank".into())),
        Algo::Edist if ranks > num_vertices => Err(Error::Config(format!(
            "edist with {ranks} ranks needs at least that many vertices, graph has {num_vertices}"
        ))),
        _ => Ok(()),
    }
}

/// Runs one algorithm with every rank hosted in this process.
pub fn run_algorithm(g: &Graph, algo: Algo, ranks: usize, cfg: &SbpConfig) -> Result<SbpResult> {
    check_combination(algo, ranks, g.num_vertices())?;
    match algo {
        Algo::Serial => sbp(g, cfg),
        Algo::Edist => {
            let mut out = run_inprocess(ranks, None, |comm| edist_run(g, cfg, comm))?;
            Ok(out.swap_remove(0).result)
        }
        Algo::Dcsbp => run_inprocess(ranks, None, |comm| dcsbp_run(g, cfg, comm))?
            .into_iter()
            .flatten()
            .next()
            .map(|r| r.result)
            .ok_or_else(|| Error::Input("root rank produced no result".into())),
    }
}

/// Fraction of vertices left without edges after a round-robin split into
/// `ranks` subgraphs. A self-loop keeps its vertex connected.
pub fn split_island_fraction(g: &Graph, ranks: usize) -> f64 {
    let n = g.num_vertices();
    if n == 0 || ranks == 0 {
        return 0.0;
    }
    let same = |v: usize, w: usize| v % ranks == w % ranks;
    let islands = (0..n)
        .filter(|&v| {
            !g.out_neighbors(v).iter().any(|&(w, _)| same(v, w)) && !g.in_neighbors(v).iter().any(|&(u, _)| same(v, u))
        })
        .count();
    islands as f64 / n as f64
}

/// Island fraction an algorithm sees: only DC-SBP splits the graph.
pub fn algo_island_fraction(g: &Graph, algo: Algo, ranks: usize) -> f64 {
    match algo {
        Algo::Dcsbp if ranks > 1 => split_island_fraction(g, ranks),
        _ => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchCase {
    pub preset: String,
    pub algo: Algo,
    pub ranks: usize,
    pub seed: u64,
}

/// Cross product in preset, algo, ranks, seed order. Serial cases appear
/// only for one rank.
pub fn cases(presets: &[String], algos: &[Algo], ranks: &[usize], seeds: &[u64]) -> Vec<BenchCase> {
    let mut out = Vec::new();
    for p in presets {
        for &algo in algos {
            for &n in ranks {
                if algo == Algo::Serial && n != 1 {
                    continue;
                }
                for &seed in seeds {
                    out.push(BenchCase {
                        preset: p.clone(),
                        algo,
                        ranks: n,
                        seed,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub case: BenchCase,
    pub nmi: f64,
    pub dl_norm: f64,
    pub island_fraction: f64,
    pub seconds: f64,
    pub final_communities: usize,
    /// `ok`, or the error that stopped the cell.
    pub status: String,
}

impl BenchRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(case: &BenchCase, error: &Error) -> Self {
        BenchRow {
            case: case.clone(),
            nmi: f64::NAN,
            dl_norm: f64::NAN,
            island_fraction: f64::NAN,
            seconds: 0.0,
            final_communities: 0,
            status: format!("error: {error}"),
        }
    }

    pub fn to_csv(&self) -> String {
        let status: String = self
            .status
            .chars()
            .map(|c| if c == ',' || c == '\n' || c == '\r' { ';' } else { c })
            .collect();
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.3},{},{}",
            self.case.preset,
            self.case.algo,
            self.case.ranks,
            self.case.seed,
            self.nmi,
            self.dl_norm,
            self.island_fraction,
            self.seconds,
            self.final_communities,
            status
        )
    }
}

/// Runs one cell on an already generated graph.
pub fn run_cell(case: &BenchCase, g: &Graph, truth: &[usize], base: &SbpConfig) -> BenchRow {
    let cfg = SbpConfig {
        seed: case.seed,
        ..base.clone()
    };
    let start = Instant::now();
    let outcome = run_algorithm(g, case.algo, case.ranks, &cfg).and_then(|r| {
        let score = nmi(&r.assignment, truth)?;
        let norm = normalized_dl(r.description_length, g.num_vertices(), g.num_edges())?;
        Ok((r, score, norm))
    });
    match outcome {
        Ok((r, score, norm)) => BenchRow {
            case: case.clone(),
            nmi: score,
            dl_norm: norm,
            island_fraction: algo_island_fraction(g, case.algo, case.ranks),
            seconds: start.elapsed().as_secs_f64(),
            final_communities: r.num_communities,
            status: "ok".into(),
        },
        Err(e) => BenchRow::failed(case, &e),
    }
}

type Planted = (Graph, Vec<usize>);

/// Runs every case in order, generating each (preset, seed) graph once.
/// Failures become rows and the sweep carries on.
pub fn run_sweep<F>(cases: &[BenchCase], base: &SbpConfig, mut on_row: F) -> Vec<BenchRow>
where
    F: FnMut(&BenchRow),
{
    let mut graphs: HashMap<(String, u64), Result<Planted, String>> = HashMap::new();
    let mut rows = Vec::with_capacity(cases.len());
    for case in cases {
        let entry = graphs.entry((case.preset.clone(), case.seed)).or_insert_with(|| {
            preset(&case.preset)
                .and_then(|mut p| {
                    p.seed = case.seed;
                    generate(&p)
                })
                .map_err(|e| e.to_string())
        });
        let row = match entry {
            Ok((g, truth)) => run_cell(case, g, truth, base),
            Err(msg) => BenchRow::failed(case, &Error::Input(msg.clone())),
        };
        on_row(&row);
        rows.push(row);
    }
    rows
}

/// Writes the header and rows as CSV.
pub fn write_csv<W: Write>(mut out: W, rows: &[BenchRow]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}
