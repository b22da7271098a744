//! Fixed-width little-endian encodings of the records EDiSt exchanges.

use crate::error::Result;
use crate::inference::MergeProposal;
use crate::wire::{put_u64, Reader};

/// An accepted vertex move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MoveRecord {
    pub vertex: usize,
    pub destination: usize,
}

/// Count, then `(community, target, delta_dl bits)` per proposal.
pub fn encode_merge_proposals(proposals: &[MergeProposal]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 24 * proposals.len());
    put_u64(&mut out, proposals.len() as u64);
    for p in proposals {
        put_u64(&mut out, p.community as u64);
        put_u64(&mut out, p.target as u64);
        put_u64(&mut out, p.delta_dl.to_bits());
    }
    out
}

pub fn decode_merge_proposals(bytes: &[u8]) -> Result<Vec<MergeProposal>> {
    let mut r = Reader::new(bytes);
    let n = r.count(24)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(MergeProposal {
            community: r.usize_value()?,
            target: r.usize_value()?,
            delta_dl: f64::from_bits(r.u64()?),
        });
    }
    r.finish()?;
    Ok(out)
}

/// Count, then `(vertex, destination)` per record.
pub fn encode_move_records(records: &[MoveRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 16 * records.len());
    put_u64(&mut out, records.len() as u64);
    for m in records {
        put_u64(&mut out, m.vertex as u64);
        put_u64(&mut out, m.destination as u64);
    }
    out
}

pub fn decode_move_records(bytes: &[u8]) -> Result<Vec<MoveRecord>> {
    let mut r = Reader::new(bytes);
    let n = r.count(16)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(MoveRecord {
            vertex: r.usize_value()?,
            destination: r.usize_value()?,
        });
    }
    r.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let bytes = encode_move_records(&[MoveRecord { vertex: 2, destination: 5 }]);
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[..8], &1u64.to_le_bytes());
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        let p = MergeProposal { community: 1, target: 0, delta_dl: -0.5 };
        let bytes = encode_merge_proposals(&[p]);
        assert_eq!(&bytes[24..32], &(-0.5f64).to_bits().to_le_bytes());
    }

    #[test]
    fn rejects_truncated_and_trailing() {
        let mut bytes = encode_move_records(&[MoveRecord { vertex: 2, destination: 5 }]);
        assert!(decode_move_records(&bytes[..20]).is_err());
        bytes.push(0);
        assert!(decode_move_records(&bytes).is_err());
        assert!(decode_merge_proposals(&[0xff; 8]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(raw in proptest::collection::vec((0usize..1 << 40, 0usize..1 << 40, any::<f64>()), 0..50)) {
            let props: Vec<MergeProposal> = raw.iter().map(|&(c, t, d)| MergeProposal { community: c, target: t, delta_dl: d }).collect();
            let back = decode_merge_proposals(&encode_merge_proposals(&props)).unwrap();
            prop_assert_eq!(back.len(), props.len());
            for (a, b) in back.iter().zip(&props) {
                prop_assert_eq!((a.community, a.target, a.delta_dl.to_bits()), (b.community, b.target, b.delta_dl.to_bits()));
            }
            let moves: Vec<MoveRecord> = raw.iter().map(|&(v, d, _)| MoveRecord { vertex: v, destination: d }).collect();
            prop_assert_eq!(decode_move_records(&encode_move_records(&moves)).unwrap(), moves);
        }
    }
}
