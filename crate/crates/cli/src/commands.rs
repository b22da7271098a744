use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use sbp_core::bench::{self, check_combination, run_algorithm, Algo};
use sbp_core::generator::{self, GeneratorParams};
use sbp_core::graph::{load_edge_list, load_truth, write_assignment, Graph};
use sbp_core::inference::{SbpConfig, SbpResult, TraceRecord};
use sbp_core::metrics::{nmi, normalized_dl};

use crate::{launch, AlgoArg, BenchArgs, Backend, GenerateArgs, RunArgs};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

/// Bad arguments that clap cannot catch on its own.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        match cause.downcast_ref::<sbp_core::Error>() {
            Some(sbp_core::Error::Config(_)) => return EXIT_USAGE,
            Some(sbp_core::Error::ReplicaDivergence { .. }) => return EXIT_INVARIANT,
            _ => {}
        }
    }
    EXIT_RUNTIME
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let mut p = match &a.preset {
        Some(name) => generator::preset(name)?,
        None => GeneratorParams::default(),
    };
    if let Some(path) = &a.params {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        p.apply_manifest(&text).with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(r) = a.intra_ratio {
        p.intra_ratio = r;
    }
    if let Some(alpha) = a.dirichlet_alpha {
        p.dirichlet_alpha = alpha;
    }
    if let Some(x) = a.powerlaw_exponent {
        p.powerlaw_exponent = x;
    }
    if let Some(seed) = a.seed {
        p.seed = seed;
    }
    p.validate()?;
    let (g, truth) = generator::generate(&p)?;
    generator::write_outputs(&a.out, &p, &g, &truth).with_context(|| format!("writing to {}", a.out.display()))?;
    println!(
        "vertices={} edges={} communities={} seed={} out={}",
        g.num_vertices(),
        g.num_edges(),
        p.num_communities,
        p.seed,
        a.out.display()
    );
    Ok(())
}

/// Loads the graph and optional truth; the graph grows to cover every
/// vertex the truth file names.
pub fn load_inputs(a: &RunArgs) -> Result<(Graph, Option<Vec<usize>>)> {
    let file = File::open(&a.graph).with_context(|| format!("opening {}", a.graph.display()))?;
    let mut g = load_edge_list(BufReader::new(file), a.base_index).with_context(|| format!("in {}", a.graph.display()))?;
    let truth = match &a.truth {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let t = load_truth(BufReader::new(file), a.base_index, g.num_vertices())
                .with_context(|| format!("in {}", path.display()))?;
            if t.len() > g.num_vertices() {
                g = g.padded_to(t.len());
            }
            Some(t)
        }
        None => None,
    };
    Ok((g, truth))
}

pub fn run_config(a: &RunArgs) -> SbpConfig {
    let base = SbpConfig::with_seed(a.seed);
    SbpConfig {
        workers: a.workers,
        verify_replicas: a.verify_replicas || base.verify_replicas,
        ..base
    }
}

pub fn run(a: RunArgs) -> Result<()> {
    if a.rank.is_some() {
        return launch::child(&a);
    }
    if a.rendezvous.is_some() {
        return Err(Usage("--rendezvous is only valid together with --rank".into()).into());
    }
    let algo = Algo::from(a.algo);
    let (g, truth) = load_inputs(&a)?;
    check_combination(algo, a.ranks, g.num_vertices())?;
    let cfg = run_config(&a);
    cfg.validate()?;
    let start = Instant::now();
    let result = match a.backend {
        Backend::Multiprocess if a.ranks > 1 => launch::parent(&a, &g, &cfg)?,
        _ => run_algorithm(&g, algo, a.ranks, &cfg)?,
    };
    let seconds = start.elapsed().as_secs_f64();
    write_partition(&a.out, &result, a.base_index)?;
    if let Some(path) = &a.trace {
        write_trace(path, &result.trace)?;
    }
    let dl_norm = if g.num_edges() > 0 {
        normalized_dl(result.description_length, g.num_vertices(), g.num_edges())?
    } else {
        f64::NAN
    };
    let score = match &truth {
        Some(t) => format!("{:.6}", nmi(&result.assignment, t)?),
        None => "na".into(),
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    println!(
        "algo={} ranks={} communities={} dl={:.6} dl_norm={:.6} nmi={} seconds={:.3} seed={} args=\"{}\"",
        algo,
        a.ranks,
        result.num_communities,
        result.description_length,
        dl_norm,
        score,
        seconds,
        a.seed,
        args.join(" ")
    );
    Ok(())
}

fn write_partition(path: &Path, result: &SbpResult, base_index: usize) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    write_assignment(&result.assignment, &mut out, base_index)?;
    out.flush()?;
    Ok(())
}

fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", TraceRecord::CSV_HEADER)?;
    for r in trace {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()?;
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<()> {
    if a.ranks_list.contains(&0) {
        return Err(Usage("rank counts must be at least 1".into()).into());
    }
    if a.seeds == 0 {
        return Err(Usage("--seeds must be at least 1".into()).into());
    }
    let algos: Vec<Algo> = a.algos.iter().copied().map(AlgoArg::into).collect();
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed + i).collect();
    let cases = bench::cases(&a.preset_list, &algos, &a.ranks_list, &seeds);
    let base = SbpConfig {
        workers: a.workers,
        ..SbpConfig::default()
    };
    base.validate()?;
    let file = File::create(&a.csv).with_context(|| format!("creating {}", a.csv.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", bench::CSV_HEADER)?;
    let mut write_error = None;
    let rows = bench::run_sweep(&cases, &base, |row| {
        eprintln!("{}", row.to_csv());
        if write_error.is_none() {
            if let Err(e) = writeln!(out, "{}", row.to_csv()).and_then(|_| out.flush()) {
                write_error = Some(e);
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e).with_context(|| format!("writing {}", a.csv.display()));
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    println!("rows={} failed={} csv={}", rows.len(), failed, a.csv.display());
    Ok(())
}
