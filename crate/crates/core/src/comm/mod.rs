//! Rank abstraction and the collective operations the distributed
//! algorithms are written against.
//!
//! Every collective must be entered by all ranks the same number of times
//! and in the same order. Two backends are provided: [`InProcess`], where
//! ranks are threads meeting at an in-memory rendezvous, and [`tcp`], where
//! ranks are processes talking to rank 0 over local sockets.

mod frame;
mod inprocess;
pub mod tcp;

use std::time::Duration;

use crate::error::CommError;

pub use frame::{decode_frame, decode_payload_list, encode_frame, encode_payload_list, Frame, FrameKind};
pub use inprocess::{run_inprocess, InProcess};
pub use tcp::{run_tcp_threads, TcpComm};

pub type CommResult<T> = std::result::Result<T, CommError>;

/// Default time a rank waits for its peers before reporting a deadlock.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

pub trait Communicator {
    fn rank(&self) -> usize;

    fn size(&self) -> usize;

    fn is_root(&self) -> bool {
        self.rank() == 0
    }

    /// Every rank receives every rank's payload, in rank order.
    fn allgather(&self, payload: &[u8]) -> CommResult<Vec<Vec<u8>>>;

    /// No rank returns until all ranks have entered.
    fn barrier(&self) -> CommResult<()>;

    /// Queues a payload for rank 0. Must not be called on rank 0.
    fn send_to_root(&self, payload: &[u8]) -> CommResult<()>;

    /// On rank 0, takes the next queued payload from each non-root rank,
    /// tagged with its sender.
    fn receive_at_root(&self) -> CommResult<Vec<(usize, Vec<u8>)>>;
}

/// Identifiers checked at each rendezvous so that ranks entering different
/// collectives fail loudly instead of exchanging garbage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Collective {
    Allgather,
    Barrier,
}
