#![allow(dead_code)]

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbp_core::comm::Communicator;

#[derive(Clone, Copy, Debug)]
pub enum Op {
    Allgather,
    Barrier,
    ToRoot,
}

/// A random schedule of collectives shared by every rank of one round.
#[derive(Clone, Debug)]
pub struct Round {
    pub id: u64,
    pub size: usize,
    pub ops: Vec<Op>,
    pub max_payload: usize,
}

impl Round {
    pub fn random(id: u64, max_size: usize, max_payload: usize) -> Round {
        let mut rng = ChaCha8Rng::seed_from_u64(id);
        let size = rng.random_range(1..=max_size);
        let ops = (0..rng.random_range(1..=6))
            .map(|_| match rng.random_range(0..3) {
                0 => Op::Allgather,
                1 => Op::Barrier,
                _ => Op::ToRoot,
            })
            .collect();
        Round {
            id,
            size,
            ops,
            max_payload,
        }
    }
}

/// Bytes rank `rank` contributes to step `step`; any rank can recompute
/// them, which is what makes the echo check possible.
pub fn payload(round: u64, step: usize, rank: usize, max_len: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(round.wrapping_mul(1_000_003) ^ ((step as u64) << 20) ^ rank as u64);
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random()).collect()
}

/// Plays a round on one rank, jittering its timing, and checks every
/// result byte for byte.
pub fn play<C: Communicator>(comm: &C, round: &Round) -> Result<(), String> {
    let mut jitter = ChaCha8Rng::seed_from_u64(round.id ^ ((comm.rank() as u64) << 32));
    let n = comm.size();
    for (step, op) in round.ops.iter().enumerate() {
        match jitter.random_range(0..4) {
            0 => std::thread::sleep(Duration::from_micros(jitter.random_range(0..300))),
            1 => std::thread::yield_now(),
            _ => {}
        }
        let mine = payload(round.id, step, comm.rank(), round.max_payload);
        match op {
            Op::Allgather => {
                let got = comm.allgather(&mine).map_err(|e| e.to_string())?;
                if got.len() != n {
                    return Err(format!("round {} step {step}: {} payloads for {n} ranks", round.id, got.len()));
                }
                for (r, p) in got.iter().enumerate() {
                    if *p != payload(round.id, step, r, round.max_payload) {
                        return Err(format!("round {} step {step}: payload of rank {r} corrupted", round.id));
                    }
                }
            }
            Op::Barrier => comm.barrier().map_err(|e| e.to_string())?,
            Op::ToRoot => {
                if comm.is_root() {
                    let got = comm.receive_at_root().map_err(|e| e.to_string())?;
                    let senders: Vec<usize> = got.iter().map(|(s, _)| *s).collect();
                    if senders != (1..n).collect::<Vec<_>>() {
                        return Err(format!("round {} step {step}: senders {senders:?}", round.id));
                    }
                    for (s, p) in got {
                        if p != payload(round.id, step, s, round.max_payload) {
                            return Err(format!("round {} step {step}: message from rank {s} corrupted", round.id));
                        }
                    }
                } else {
                    comm.send_to_root(&mine).map_err(|e| e.to_string())?;
                }
            }
        }
    }
    Ok(())
}
