//! One process per rank. The parent is rank 0; it listens on loopback and
//! starts the other ranks as copies of this executable.

use std::net::{SocketAddr, TcpListener};
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use sbp_core::bench::Algo;
use sbp_core::comm::TcpComm;
use sbp_core::dcsbp::dcsbp_run;
use sbp_core::edist::edist_run;
use sbp_core::graph::Graph;
use sbp_core::inference::{SbpConfig, SbpResult};

use crate::commands::{load_inputs, run_config, Usage};
use crate::RunArgs;

struct Children(Vec<(usize, Child)>);

impl Drop for Children {
    fn drop(&mut self) {
        for (_, c) in &mut self.0 {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

fn run_rank(g: &Graph, algo: Algo, cfg: &SbpConfig, comm: &TcpComm) -> sbp_core::Result<Option<SbpResult>> {
    match algo {
        Algo::Edist => {
            let out = edist_run(g, cfg, comm)?;
            Ok(Some(out.result))
        }
        Algo::Dcsbp => Ok(dcsbp_run(g, cfg, comm)?.map(|r| r.result)),
        Algo::Serial => Err(sbp_core::Error::Config("serial runs use exactly one rank".into())),
    }
}

fn child_args(a: &RunArgs, rank: usize, addr: SocketAddr) -> Vec<String> {
    let mut args = vec![
        "run".to_string(),
        "--graph".into(),
        a.graph.display().to_string(),
        "--algo".into(),
        Algo::from(a.algo).to_string(),
        "--ranks".into(),
        a.ranks.to_string(),
        "--backend".into(),
        "multiprocess".into(),
        "--workers".into(),
        a.workers.to_string(),
        "--seed".into(),
        a.seed.to_string(),
        "--out".into(),
        a.out.display().to_string(),
        "--base-index".into(),
        a.base_index.to_string(),
        "--timeout".into(),
        a.timeout.to_string(),
        "--rank".into(),
        rank.to_string(),
        "--rendezvous".into(),
        addr.to_string(),
    ];
    if let Some(t) = &a.truth {
        args.push("--truth".into());
        args.push(t.display().to_string());
    }
    if a.verify_replicas {
        args.push("--verify-replicas".into());
    }
    args
}

pub fn parent(a: &RunArgs, g: &Graph, cfg: &SbpConfig) -> Result<SbpResult> {
    let timeout = Duration::from_secs(a.timeout);
    let listener = TcpListener::bind("127.0.0.1:0").context("binding rendezvous socket")?;
    let addr = listener.local_addr()?;
    let exe = std::env::current_exe().context("locating own executable")?;
    let mut children = Children(Vec::new());
    for rank in 1..a.ranks {
        let child = Command::new(&exe)
            .args(child_args(a, rank, addr))
            .env_remove("SBP_SEED")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::inherit())
            .spawn()
            .with_context(|| format!("starting rank {rank}"))?;
        children.0.push((rank, child));
    }
    let comm = TcpComm::root(&listener, a.ranks, timeout)?;
    let outcome = run_rank(g, Algo::from(a.algo), cfg, &comm);
    if let Err(e) = &outcome {
        comm.abort(&e.to_string());
    }
    drop(comm);
    let mut child_failure = None;
    for (rank, mut c) in std::mem::take(&mut children.0) {
        let status = c.wait().with_context(|| format!("waiting for rank {rank}"))?;
        if !status.success() && child_failure.is_none() {
            child_failure = Some(anyhow!("rank {rank} exited with {status}"));
        }
    }
    let result = outcome?.ok_or_else(|| anyhow!("root rank produced no result"))?;
    match child_failure {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

pub fn child(a: &RunArgs) -> Result<()> {
    let rank = a.rank.expect("child mode needs a rank");
    let addr: SocketAddr = a
        .rendezvous
        .as_deref()
        .ok_or_else(|| Usage("--rank needs --rendezvous".into()))?
        .parse()
        .map_err(|e| Usage(format!("bad rendezvous address: {e}")))?;
    if rank == 0 || rank >= a.ranks {
        return Err(Usage(format!("rank {rank} is outside 1..{}", a.ranks)).into());
    }
    let (g, _) = load_inputs(a)?;
    let cfg = run_config(a);
    let comm = TcpComm::connect(addr, rank, a.ranks, Duration::from_secs(a.timeout))?;
    if let Err(e) = run_rank(&g, Algo::from(a.algo), &cfg, &comm) {
        comm.abort(&e.to_string());
        return Err(e.into());
    }
    Ok(())
}
