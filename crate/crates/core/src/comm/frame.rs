use crate::error::{Error, Result};
use crate::wire::{put_u64, Reader};

/// Kind byte of a multi-process frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Hello = 1,
    Allgather = 2,
    Barrier = 3,
    ToRoot = 4,
    Abort = 5,
}

impl FrameKind {
    fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            1 => FrameKind::Hello,
            2 => FrameKind::Allgather,
            3 => FrameKind::Barrier,
            4 => FrameKind::ToRoot,
            5 => FrameKind::Abort,
            _ => return Err(Error::Decode(format!("unknown frame kind {b}"))),
        })
    }
}

/// One message of the multi-process wire protocol. On the wire a frame is
/// an 8-byte little-endian length followed by `[kind][seq: u64][body]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub seq: u64,
    pub body: Vec<u8>,
}

pub(crate) const FRAME_HEADER: usize = 9;

pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + FRAME_HEADER + frame.body.len());
    put_u64(&mut out, (FRAME_HEADER + frame.body.len()) as u64);
    out.push(frame.kind as u8);
    put_u64(&mut out, frame.seq);
    out.extend_from_slice(&frame.body);
    out
}

/// Decodes a frame payload (the bytes after the length prefix).
pub(crate) fn decode_frame_payload(payload: &[u8]) -> Result<Frame> {
    let mut r = Reader::new(payload);
    let kind = FrameKind::from_byte(r.u8()?)?;
    let seq = r.u64()?;
    let body = r.take(r.remaining())?.to_vec();
    Ok(Frame { kind, seq, body })
}

/// Decodes one length-prefixed frame from the front of `bytes`, returning
/// it with the number of bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize)> {
    let mut r = Reader::new(bytes);
    let len = r.count(1)?;
    let frame = decode_frame_payload(r.take(len)?)?;
    Ok((frame, 8 + len))
}

/// Count-prefixed list of length-prefixed byte strings.
pub fn encode_payload_list(items: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::new();
    put_u64(&mut out, items.len() as u64);
    for item in items {
        put_u64(&mut out, item.len() as u64);
        out.extend_from_slice(item);
    }
    out
}

pub fn decode_payload_list(bytes: &[u8]) -> Result<Vec<Vec<u8>>> {
    let mut r = Reader::new(bytes);
    let n = r.count(8)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.count(1)?;
        out.push(r.take(len)?.to_vec());
    }
    r.finish()?;
    Ok(out)
}
