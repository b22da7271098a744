use std::collections::VecDeque;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use crate::error::{CommError, Error, Result};

use super::{Collective, CommResult, Communicator, DEFAULT_TIMEOUT};

struct State {
    generation: u64,
    arrived: usize,
    kind: Option<Collective>,
    slots: Vec<Option<Vec<u8>>>,
    last: Arc<Vec<Vec<u8>>>,
    mailboxes: Vec<VecDeque<Vec<u8>>>,
    poisoned: Option<String>,
}

struct Shared {
    size: usize,
    timeout: Duration,
    state: Mutex<State>,
    wake: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn poison(&self, why: String) {
        let mut st = self.lock();
        st.poisoned.get_or_insert(why);
        self.wake.notify_all();
    }
}

/// Handle for one rank of an in-process group. Handles are created by
/// [`InProcess::group`] or [`run_inprocess`].
pub struct InProcess {
    rank: usize,
    shared: Arc<Shared>,
}

impl InProcess {
    /// Creates `size` connected handles, one per rank.
    pub fn group(size: usize, timeout: Duration) -> Vec<InProcess> {
        assert!(size >= 1, "a group needs at least one rank");
        let shared = Arc::new(Shared {
            size,
            timeout,
            state: Mutex::new(State {
                generation: 0,
                arrived: 0,
                kind: None,
                slots: vec![None; size],
                last: Arc::new(Vec::new()),
                mailboxes: vec![VecDeque::new(); size],
                poisoned: None,
            }),
            wake: Condvar::new(),
        });
        (0..size)
            .map(|rank| InProcess {
                rank,
                shared: Arc::clone(&shared),
            })
            .collect()
    }

    /// Marks the group failed so every waiting or future collective
    /// returns [`CommError::PeerFailed`].
    pub fn poison(&self, why: impl Into<String>) {
        self.shared.poison(why.into());
    }

    fn wait<'a>(
        &self,
        mut st: MutexGuard<'a, State>,
        deadline: Instant,
        mut done: impl FnMut(&State) -> bool,
    ) -> CommResult<MutexGuard<'a, State>> {
        loop {
            if let Some(why) = &st.poisoned {
                return Err(CommError::PeerFailed(why.clone()));
            }
            if done(&st) {
                return Ok(st);
            }
            let now = Instant::now();
            if now >= deadline {
                let timeout = self.shared.timeout;
                st.poisoned
                    .get_or_insert(format!("rank {} timed out after {timeout:?}", self.rank));
                self.shared.wake.notify_all();
                return Err(CommError::Timeout(timeout));
            }
            st = self
                .shared
                .wake
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    fn rendezvous(&self, kind: Collective, payload: Vec<u8>) -> CommResult<Arc<Vec<Vec<u8>>>> {
        let deadline = Instant::now() + self.shared.timeout;
        let mut st = self.shared.lock();
        if let Some(why) = &st.poisoned {
            return Err(CommError::PeerFailed(why.clone()));
        }
        match st.kind {
            Some(k) if k != kind => {
                let msg = format!("rank {} entered {kind:?} while peers are in {k:?}", self.rank);
                st.poisoned.get_or_insert(msg.clone());
                self.shared.wake.notify_all();
                return Err(CommError::Protocol(msg));
            }
            _ => st.kind = Some(kind),
        }
        st.slots[self.rank] = Some(payload);
        st.arrived += 1;
        if st.arrived == self.shared.size {
            let gathered: Vec<Vec<u8>> = st.slots.iter_mut().map(|s| s.take().expect("every rank deposited")).collect();
            st.last = Arc::new(gathered);
            st.arrived = 0;
            st.kind = None;
            st.generation += 1;
            self.shared.wake.notify_all();
            return Ok(Arc::clone(&st.last));
        }
        let generation = st.generation;
        let st = self.wait(st, deadline, |s| s.generation != generation)?;
        Ok(Arc::clone(&st.last))
    }
}

impl Communicator for InProcess {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.shared.size
    }

    fn allgather(&self, payload: &[u8]) -> CommResult<Vec<Vec<u8>>> {
        Ok(self.rendezvous(Collective::Allgather, payload.to_vec())?.as_ref().clone())
    }

    fn barrier(&self) -> CommResult<()> {
        self.rendezvous(Collective::Barrier, Vec::new()).map(|_| ())
    }

    fn send_to_root(&self, payload: &[u8]) -> CommResult<()> {
        if self.rank == 0 {
            return Err(CommError::Protocol("rank 0 cannot send to itself".into()));
        }
        let mut st = self.shared.lock();
        if let Some(why) = &st.poisoned {
            return Err(CommError::PeerFailed(why.clone()));
        }
        st.mailboxes[self.rank].push_back(payload.to_vec());
        self.shared.wake.notify_all();
        Ok(())
    }

    fn receive_at_root(&self) -> CommResult<Vec<(usize, Vec<u8>)>> {
        if self.rank != 0 {
            return Err(CommError::Protocol(format!("rank {} is not the root", self.rank)));
        }
        let deadline = Instant::now() + self.shared.timeout;
        let st = self.shared.lock();
        let mut st = self.wait(st, deadline, |s| s.mailboxes[1..].iter().all(|m| !m.is_empty()))?;
        Ok((1..self.shared.size)
            .map(|r| (r, st.mailboxes[r].pop_front().expect("checked non-empty")))
            .collect())
    }
}

/// Runs `f` once per rank on its own thread and returns the per-rank
/// results in rank order. If any rank fails, the group is poisoned so the
/// others abort, and the first root-cause error is returned.
pub fn run_inprocess<T, F>(size: usize, timeout: Option<Duration>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&InProcess) -> Result<T> + Sync,
{
    if size == 0 {
        return Err(Error::Config("rank count must be at least 1".into()));
    }
    let handles = InProcess::group(size, timeout.unwrap_or(DEFAULT_TIMEOUT));
    let outcomes: Vec<Result<T>> = std::thread::scope(|scope| {
        let joins: Vec<_> = handles
            .iter()
            .map(|comm| {
                let f = &f;
                scope.spawn(move || {
                    let out = catch_unwind(AssertUnwindSafe(|| f(comm)));
                    let out = match out {
                        Ok(r) => r,
                        Err(panic) => {
                            let msg = panic
                                .downcast_ref::<String>()
                                .cloned()
                                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                                .unwrap_or_else(|| "panic".into());
                            Err(Error::Comm(CommError::PeerFailed(format!("rank {} panicked: {msg}", comm.rank))))
                        }
                    };
                    if let Err(e) = &out {
                        comm.poison(format!("rank {} failed: {e}", comm.rank));
                    }
                    out
                })
            })
            .collect();
        joins.into_iter().map(|j| j.join().expect("rank thread")).collect()
    });
    let mut results = Vec::with_capacity(size);
    let mut secondary = None;
    for out in outcomes {
        match out {
            Ok(v) => results.push(v),
            Err(Error::Comm(CommError::PeerFailed(m))) => {
                secondary.get_or_insert(Error::Comm(CommError::PeerFailed(m)));
            }
            Err(e) => return Err(e),
        }
    }
    match secondary {
        Some(e) => Err(e),
        None => Ok(results),
    }
}
