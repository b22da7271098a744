//! Multi-process backend: every non-root rank holds one socket to rank 0,
//! which coordinates each collective.

use std::cell::Cell;
use std::io::{ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::time::{Duration, Instant};

use crate::error::CommError;
use crate::wire::{put_u64, Reader};

use super::frame::{decode_frame_payload, FRAME_HEADER};
use super::{decode_payload_list, encode_frame, encode_payload_list, CommResult, Communicator, Frame, FrameKind};

/// Largest frame a peer may announce.
pub const MAX_FRAME_BYTES: u64 = 1 << 31;

enum Links {
    Root(Vec<TcpStream>),
    Child(TcpStream),
}

pub struct TcpComm {
    rank: usize,
    size: usize,
    timeout: Duration,
    seq: Cell<u64>,
    links: Links,
}

fn io_error(e: std::io::Error, timeout: Duration) -> CommError {
    match e.kind() {
        ErrorKind::WouldBlock | ErrorKind::TimedOut => CommError::Timeout(timeout),
        ErrorKind::UnexpectedEof | ErrorKind::ConnectionReset | ErrorKind::BrokenPipe => {
            CommError::PeerFailed(format!("connection lost: {e}"))
        }
        _ => CommError::Transport(e),
    }
}

fn write_frame(stream: &TcpStream, frame: &Frame, timeout: Duration) -> CommResult<()> {
    let mut s = stream;
    s.write_all(&encode_frame(frame)).map_err(|e| io_error(e, timeout))?;
    s.flush().map_err(|e| io_error(e, timeout))
}

fn read_frame(stream: &TcpStream, timeout: Duration) -> CommResult<Frame> {
    let mut s = stream;
    let mut len = [0u8; 8];
    s.read_exact(&mut len).map_err(|e| io_error(e, timeout))?;
    let len = u64::from_le_bytes(len);
    if !(FRAME_HEADER as u64..=MAX_FRAME_BYTES).contains(&len) {
        return Err(CommError::Protocol(format!("frame length {len} out of range")));
    }
    let mut payload = vec![0u8; len as usize];
    s.read_exact(&mut payload).map_err(|e| io_error(e, timeout))?;
    let frame = decode_frame_payload(&payload).map_err(|e| CommError::Protocol(e.to_string()))?;
    if frame.kind == FrameKind::Abort {
        return Err(CommError::PeerFailed(String::from_utf8_lossy(&frame.body).into_owned()));
    }
    Ok(frame)
}

fn prepare(stream: &TcpStream, timeout: Duration) -> CommResult<()> {
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.set_nodelay(true)?;
    Ok(())
}

impl TcpComm {
    /// Rank 0: waits for `size - 1` peers to connect and introduce themselves.
    pub fn root(listener: &TcpListener, size: usize, timeout: Duration) -> CommResult<TcpComm> {
        let mut slots: Vec<Option<TcpStream>> = (1..size).map(|_| None).collect();
        let deadline = Instant::now() + timeout;
        listener.set_nonblocking(true)?;
        let mut pending = size - 1;
        while pending > 0 {
            let stream = match listener.accept() {
                Ok((s, _)) => s,
                Err(e) if e.kind() == ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(CommError::Timeout(timeout));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            stream.set_nonblocking(false)?;
            prepare(&stream, timeout)?;
            let hello = read_frame(&stream, timeout)?;
            let mut r = Reader::new(&hello.body);
            let (rank, their_size) = match (hello.kind, r.u64(), r.u64()) {
                (FrameKind::Hello, Ok(a), Ok(b)) => (a as usize, b as usize),
                _ => return Err(CommError::Protocol("expected a hello frame".into())),
            };
            if their_size != size || rank == 0 || rank >= size {
                return Err(CommError::Protocol(format!(
                    "peer announced rank {rank} of {their_size}, expected a rank in 1..{size}"
                )));
            }
            if slots[rank - 1].replace(stream).is_some() {
                return Err(CommError::Protocol(format!("rank {rank} connected twice")));
            }
            pending -= 1;
        }
        Ok(TcpComm {
            rank: 0,
            size,
            timeout,
            seq: Cell::new(0),
            links: Links::Root(slots.into_iter().map(|s| s.expect("all ranks connected")).collect()),
        })
    }

    /// Non-root rank: connects to rank 0, retrying until `timeout`.
    pub fn connect(addr: SocketAddr, rank: usize, size: usize, timeout: Duration) -> CommResult<TcpComm> {
        if rank == 0 || rank >= size {
            return Err(CommError::Protocol(format!("rank {rank} is not a peer rank of {size}")));
        }
        let deadline = Instant::now() + timeout;
        let stream = loop {
            match TcpStream::connect(addr) {
                Ok(s) => break s,
                Err(e) if Instant::now() < deadline => {
                    log::debug!("rank {rank} waiting for rendezvous at {addr}: {e}");
                    std::thread::sleep(Duration::from_millis(20));
                }
                Err(e) => return Err(e.into()),
            }
        };
        prepare(&stream, timeout)?;
        let mut body = Vec::new();
        put_u64(&mut body, rank as u64);
        put_u64(&mut body, size as u64);
        write_frame(
            &stream,
            &Frame {
                kind: FrameKind::Hello,
                seq: 0,
                body,
            },
            timeout,
        )?;
        Ok(TcpComm {
            rank,
            size,
            timeout,
            seq: Cell::new(0),
            links: Links::Child(stream),
        })
    }

    /// Tells peers this rank is giving up, so they fail instead of waiting.
    pub fn abort(&self, why: &str) {
        let frame = Frame {
            kind: FrameKind::Abort,
            seq: self.seq.get(),
            body: why.as_bytes().to_vec(),
        };
        let streams: Vec<&TcpStream> = match &self.links {
            Links::Root(v) => v.iter().collect(),
            Links::Child(s) => vec![s],
        };
        for s in streams {
            let _ = write_frame(s, &frame, self.timeout);
        }
    }

    fn next_seq(&self) -> u64 {
        let s = self.seq.get() + 1;
        self.seq.set(s);
        s
    }

    fn expect(&self, frame: Frame, kind: FrameKind, seq: u64, from: usize) -> CommResult<Vec<u8>> {
        if frame.kind != kind || frame.seq != seq {
            return Err(CommError::Protocol(format!(
                "rank {from} sent {:?} #{} while {kind:?} #{seq} was expected",
                frame.kind, frame.seq
            )));
        }
        Ok(frame.body)
    }

    fn exchange(&self, kind: FrameKind, payload: &[u8]) -> CommResult<Vec<Vec<u8>>> {
        let seq = self.next_seq();
        match &self.links {
            Links::Root(peers) => {
                let mut all = Vec::with_capacity(self.size);
                all.push(payload.to_vec());
                for (i, s) in peers.iter().enumerate() {
                    let f = read_frame(s, self.timeout)?;
                    all.push(self.expect(f, kind, seq, i + 1)?);
                }
                let body = if kind == FrameKind::Allgather {
                    encode_payload_list(&all)
                } else {
                    Vec::new()
                };
                let reply = Frame { kind, seq, body };
                for s in peers {
                    write_frame(s, &reply, self.timeout)?;
                }
                Ok(all)
            }
            Links::Child(s) => {
                write_frame(
                    s,
                    &Frame {
                        kind,
                        seq,
                        body: payload.to_vec(),
                    },
                    self.timeout,
                )?;
                let body = self.expect(read_frame(s, self.timeout)?, kind, seq, 0)?;
                if kind != FrameKind::Allgather {
                    return Ok(Vec::new());
                }
                let all = decode_payload_list(&body).map_err(|e| CommError::Protocol(e.to_string()))?;
                if all.len() != self.size {
                    return Err(CommError::Protocol(format!(
                        "gathered {} payloads for {} ranks",
                        all.len(),
                        self.size
                    )));
                }
                Ok(all)
            }
        }
    }
}

impl Communicator for TcpComm {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn allgather(&self, payload: &[u8]) -> CommResult<Vec<Vec<u8>>> {
        self.exchange(FrameKind::Allgather, payload)
    }

    fn barrier(&self) -> CommResult<()> {
        self.exchange(FrameKind::Barrier, &[]).map(|_| ())
    }

    fn send_to_root(&self, payload: &[u8]) -> CommResult<()> {
        let Links::Child(s) = &self.links else {
            return Err(CommError::Protocol("rank 0 cannot send to itself".into()));
        };
        let seq = self.next_seq();
        write_frame(
            s,
            &Frame {
                kind: FrameKind::ToRoot,
                seq,
                body: payload.to_vec(),
            },
            self.timeout,
        )
    }

    fn receive_at_root(&self) -> CommResult<Vec<(usize, Vec<u8>)>> {
        let Links::Root(peers) = &self.links else {
            return Err(CommError::Protocol(format!("rank {} is not the root", self.rank)));
        };
        let seq = self.next_seq();
        peers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let f = read_frame(s, self.timeout)?;
                Ok((i + 1, self.expect(f, FrameKind::ToRoot, seq, i + 1)?))
            })
            .collect()
    }
}

/// Runs `f` on `size` ranks connected over loopback sockets, one thread
/// per rank. Used to exercise the multi-process protocol inside tests.
pub fn run_tcp_threads<T, F>(size: usize, timeout: Duration, f: F) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(&TcpComm) -> crate::Result<T> + Sync,
{
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let outcomes: Vec<crate::Result<T>> = std::thread::scope(|scope| {
        let f = &f;
        let listener = &listener;
        let joins: Vec<_> = (0..size)
            .map(|rank| {
                scope.spawn(move || {
                    let comm = if rank == 0 {
                        TcpComm::root(listener, size, timeout)?
                    } else {
                        TcpComm::connect(addr, rank, size, timeout)?
                    };
                    let out = f(&comm);
                    if let Err(e) = &out {
                        comm.abort(&format!("rank {rank} failed: {e}"));
                    }
                    out
                })
            })
            .collect();
        joins.into_iter().map(|j| j.join().expect("rank thread")).collect()
    });
    outcomes.into_iter().collect()
}
